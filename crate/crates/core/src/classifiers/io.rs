//! Versioned text serialization for trained classifiers.
//!
//! Trees are written as a preorder list of nodes (`split`/`leaf` lines);
//! numeric values use 17 significant digits, so reloaded models predict
//! identically.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::Array2;

use super::tree::TreeNode;
use super::{
    BoostModel, BoostStage, ClassifierError, ForestModel, KnnModel, TrainedModel,
};
use crate::scalar::Scalar;

const MAGIC: &str = "profilecast-model v1";

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_tree<T: Scalar>(w: &mut impl Write, node: &TreeNode<T>) -> std::io::Result<()> {
    match node {
        TreeNode::Split { feature, threshold, left, right } => {
            writeln!(w, "split {feature} {}", fmt17(threshold.to64()))?;
            write_tree(w, left)?;
            write_tree(w, right)
        }
        TreeNode::Leaf { counts } => {
            let vals: Vec<String> = counts.iter().map(|c| fmt17(c.to64())).collect();
            writeln!(w, "leaf {}", vals.join(" "))
        }
    }
}

/// Serialize a trained model to a writer.
pub fn write_model_to<T: Scalar>(
    w: &mut impl Write,
    model: &TrainedModel<T>,
) -> Result<(), ClassifierError> {
    writeln!(w, "{MAGIC}")?;
    match model {
        TrainedModel::Knn(m) => {
            writeln!(w, "kind knn")?;
            writeln!(w, "classes {}", m.n_classes)?;
            writeln!(w, "d {}", m.train.ncols())?;
            writeln!(w, "k {}", m.k)?;
            writeln!(w, "n {}", m.train.nrows())?;
            let labels: Vec<String> = m.labels.iter().map(usize::to_string).collect();
            writeln!(w, "labels {}", labels.join(" "))?;
            for row in m.train.rows() {
                let vals: Vec<String> = row.iter().map(|v| fmt17(v.to64())).collect();
                writeln!(w, "row {}", vals.join(" "))?;
            }
        }
        TrainedModel::Forest(m) => {
            writeln!(w, "kind forest")?;
            writeln!(w, "classes {}", m.n_classes)?;
            writeln!(w, "d {}", m.n_features)?;
            writeln!(w, "trees {}", m.trees.len())?;
            writeln!(w, "mtry {}", m.mtry)?;
            writeln!(w, "min_node {}", m.min_node)?;
            match m.max_depth {
                Some(d) => writeln!(w, "max_depth {d}")?,
                None => writeln!(w, "max_depth none")?,
            }
            writeln!(w, "seed {}", m.seed)?;
            for (b, oob) in m.oob_indices.iter().enumerate() {
                let ids: Vec<String> = oob.iter().map(usize::to_string).collect();
                writeln!(w, "oob {b} {}", ids.join(" "))?;
            }
            for (b, tree) in m.trees.iter().enumerate() {
                writeln!(w, "tree {b}")?;
                write_tree(w, tree)?;
            }
        }
        TrainedModel::Boost(m) => {
            writeln!(w, "kind boost")?;
            writeln!(w, "classes {}", m.n_classes)?;
            writeln!(w, "d {}", m.n_features)?;
            writeln!(w, "stages {}", m.stages.len())?;
            writeln!(w, "learning_rate {}", fmt17(m.learning_rate.to64()))?;
            writeln!(w, "seed {}", m.seed)?;
            for (f, stage) in m.stages.iter().enumerate() {
                writeln!(
                    w,
                    "stage {f} {} {}",
                    fmt17(stage.alpha.to64()),
                    fmt17(stage.error.to64())
                )?;
                write_tree(w, &stage.tree)?;
            }
        }
    }
    writeln!(w, "end")?;
    Ok(())
}

/// Serialize a trained model to a file.
pub fn save_model<T: Scalar>(path: &Path, model: &TrainedModel<T>) -> Result<(), ClassifierError> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    write_model_to(&mut w, model)?;
    w.flush()?;
    Ok(())
}

struct Lines<R> {
    inner: R,
    line_no: usize,
}

impl<R: BufRead> Lines<R> {
    fn next(&mut self) -> Result<String, ClassifierError> {
        let mut buf = String::new();
        let n = self.inner.read_line(&mut buf)?;
        self.line_no += 1;
        if n == 0 {
            return Err(self.bad("unexpected end of file"));
        }
        Ok(buf.trim_end().to_string())
    }

    fn field(&mut self, key: &str) -> Result<String, ClassifierError> {
        let line = self.next()?;
        match line.strip_prefix(key) {
            Some(rest) if rest.is_empty() => Ok(String::new()),
            Some(rest) => rest
                .strip_prefix(' ')
                .map(str::to_string)
                .ok_or_else(|| self.bad(format!("expected `{key} ...`, got `{line}`"))),
            None => Err(self.bad(format!("expected `{key} ...`, got `{line}`"))),
        }
    }

    fn bad(&self, reason: impl Into<String>) -> ClassifierError {
        ClassifierError::ParseModel { line: self.line_no, reason: reason.into() }
    }
}

fn parse_usize(s: &str, r: &Lines<impl BufRead>) -> Result<usize, ClassifierError> {
    s.trim().parse().map_err(|_| r.bad(format!("bad integer `{s}`")))
}

fn parse_f64(s: &str, r: &Lines<impl BufRead>) -> Result<f64, ClassifierError> {
    s.trim().parse().map_err(|_| r.bad(format!("bad number `{s}`")))
}

fn read_tree<T: Scalar, R: BufRead>(r: &mut Lines<R>) -> Result<TreeNode<T>, ClassifierError> {
    let line = r.next()?;
    if let Some(rest) = line.strip_prefix("split ") {
        let mut parts = rest.split_whitespace();
        let feature = parse_usize(parts.next().unwrap_or(""), r)?;
        let threshold = T::of(parse_f64(parts.next().unwrap_or(""), r)?);
        let left = read_tree(r)?;
        let right = read_tree(r)?;
        Ok(TreeNode::Split { feature, threshold, left: Box::new(left), right: Box::new(right) })
    } else if let Some(rest) = line.strip_prefix("leaf") {
        let counts: Vec<T> = rest
            .split_whitespace()
            .map(|tok| parse_f64(tok, r).map(T::of))
            .collect::<Result<_, _>>()?;
        if counts.is_empty() {
            return Err(r.bad("leaf has no class counts"));
        }
        Ok(TreeNode::Leaf { counts })
    } else {
        Err(r.bad(format!("expected a tree node, got `{line}`")))
    }
}

/// Deserialize a trained model from a reader.
pub fn read_model_from<T: Scalar>(reader: impl BufRead) -> Result<TrainedModel<T>, ClassifierError> {
    let mut r = Lines { inner: reader, line_no: 0 };
    if r.next()? != MAGIC {
        return Err(r.bad(format!("expected `{MAGIC}` header")));
    }
    let kind = r.field("kind")?;
    let n_classes = parse_usize(&r.field("classes")?, &r)?;
    let d = parse_usize(&r.field("d")?, &r)?;

    let model = match kind.as_str() {
        "knn" => {
            let k = parse_usize(&r.field("k")?, &r)?;
            let n = parse_usize(&r.field("n")?, &r)?;
            let labels: Vec<usize> = r
                .field("labels")?
                .split_whitespace()
                .map(|tok| parse_usize(tok, &r))
                .collect::<Result<_, _>>()?;
            if labels.len() != n {
                return Err(r.bad(format!("expected {n} labels, got {}", labels.len())));
            }
            let mut data = Vec::with_capacity(n * d);
            for _ in 0..n {
                let row = r.field("row")?;
                let vals: Vec<T> = row
                    .split_whitespace()
                    .map(|tok| parse_f64(tok, &r).map(T::of))
                    .collect::<Result<_, _>>()?;
                if vals.len() != d {
                    return Err(r.bad(format!("expected {d} values, got {}", vals.len())));
                }
                data.extend(vals);
            }
            let train = Array2::from_shape_vec((n, d), data).expect("checked lengths");
            TrainedModel::Knn(KnnModel { train, labels, n_classes, k })
        }
        "forest" => {
            let n_trees = parse_usize(&r.field("trees")?, &r)?;
            let mtry = parse_usize(&r.field("mtry")?, &r)?;
            let min_node = parse_usize(&r.field("min_node")?, &r)?;
            let max_depth = match r.field("max_depth")?.as_str() {
                "none" => None,
                s => Some(parse_usize(s, &r)?),
            };
            let seed = r.field("seed")?.parse::<u64>().map_err(|_| r.bad("bad seed"))?;
            let mut oob_indices = Vec::with_capacity(n_trees);
            for b in 0..n_trees {
                let line = r.field("oob")?;
                let mut parts = line.split_whitespace();
                let idx = parse_usize(parts.next().unwrap_or(""), &r)?;
                if idx != b {
                    return Err(r.bad(format!("expected oob {b}, got {idx}")));
                }
                let oob: Vec<usize> =
                    parts.map(|tok| parse_usize(tok, &r)).collect::<Result<_, _>>()?;
                oob_indices.push(oob);
            }
            let mut trees = Vec::with_capacity(n_trees);
            for b in 0..n_trees {
                let header = r.next()?;
                if header != format!("tree {b}") {
                    return Err(r.bad(format!("expected `tree {b}`, got `{header}`")));
                }
                trees.push(read_tree(&mut r)?);
            }
            TrainedModel::Forest(ForestModel {
                trees,
                oob_indices,
                n_classes,
                n_features: d,
                mtry,
                min_node,
                max_depth,
                seed,
            })
        }
        "boost" => {
            let n_stages = parse_usize(&r.field("stages")?, &r)?;
            let learning_rate = T::of(parse_f64(&r.field("learning_rate")?, &r)?);
            let seed = r.field("seed")?.parse::<u64>().map_err(|_| r.bad("bad seed"))?;
            let mut stages = Vec::with_capacity(n_stages);
            for f in 0..n_stages {
                let line = r.field("stage")?;
                let mut parts = line.split_whitespace();
                let idx = parse_usize(parts.next().unwrap_or(""), &r)?;
                if idx != f {
                    return Err(r.bad(format!("expected stage {f}, got {idx}")));
                }
                let alpha = T::of(parse_f64(parts.next().unwrap_or(""), &r)?);
                let error = T::of(parse_f64(parts.next().unwrap_or(""), &r)?);
                let tree = read_tree(&mut r)?;
                stages.push(BoostStage { tree, alpha, error });
            }
            TrainedModel::Boost(BoostModel {
                stages,
                n_classes,
                n_features: d,
                learning_rate,
                seed,
            })
        }
        other => return Err(r.bad(format!("unknown model kind `{other}`"))),
    };
    if r.next()? != "end" {
        return Err(r.bad("expected `end`"));
    }
    Ok(model)
}

/// Deserialize a trained model from a file.
pub fn load_model<T: Scalar>(path: &Path) -> Result<TrainedModel<T>, ClassifierError> {
    read_model_from(BufReader::new(std::fs::File::open(path)?))
}

//! Versioned text serialization for fitted mixtures.
//!
//! Values are written with 17 significant digits, which round-trips `f64`
//! exactly: a reloaded model reproduces the same labels bit for bit.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::{Array1, Array2};

use super::{CovKind, CovarianceStructure, GaussianComponent, GmmError, GmmModel};
use crate::scalar::Scalar;

const MAGIC: &str = "profilecast-gmm v1";

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Write a model to a writer.
pub fn write_gmm_to<T: Scalar>(w: &mut impl Write, model: &GmmModel<T>) -> Result<(), GmmError> {
    writeln!(w, "{MAGIC}")?;
    writeln!(w, "structure {}", model.structure.kind.as_str())?;
    writeln!(w, "tied {}", model.structure.tied)?;
    writeln!(w, "h {}", model.h())?;
    writeln!(w, "d {}", model.dim())?;
    writeln!(w, "seed {}", model.seed)?;
    writeln!(w, "n_iter {}", model.n_iter)?;
    writeln!(w, "loglik {}", fmt17(model.loglik.to64()))?;
    writeln!(w, "bic {}", fmt17(model.bic.to64()))?;
    let ws: Vec<String> = model.weights.iter().map(|v| fmt17(v.to64())).collect();
    writeln!(w, "weights {}", ws.join(" "))?;
    for (k, comp) in model.components.iter().enumerate() {
        writeln!(w, "component {k}")?;
        let mean: Vec<String> = comp.mu.iter().map(|v| fmt17(v.to64())).collect();
        writeln!(w, "mean {}", mean.join(" "))?;
        let cov_values: Vec<String> = match &comp.cov {
            super::CovStore::Spherical { var } => vec![fmt17(var.to64())],
            super::CovStore::Diagonal { var } => {
                var.iter().map(|v| fmt17(v.to64())).collect()
            }
            super::CovStore::Full { sigma, .. } => {
                sigma.iter().map(|v| fmt17(v.to64())).collect()
            }
        };
        writeln!(w, "cov {}", cov_values.join(" "))?;
    }
    writeln!(w, "end")?;
    Ok(())
}

/// Write a model to a file.
pub fn write_gmm<T: Scalar>(path: &Path, model: &GmmModel<T>) -> Result<(), GmmError> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    write_gmm_to(&mut w, model)?;
    w.flush()?;
    Ok(())
}

struct LineReader<R> {
    inner: R,
    line_no: usize,
}

impl<R: BufRead> LineReader<R> {
    fn next(&mut self) -> Result<String, GmmError> {
        let mut buf = String::new();
        let n = self.inner.read_line(&mut buf)?;
        self.line_no += 1;
        if n == 0 {
            return Err(GmmError::ParseModel {
                line: self.line_no,
                reason: "unexpected end of file".into(),
            });
        }
        Ok(buf.trim_end().to_string())
    }

    fn field(&mut self, key: &str) -> Result<String, GmmError> {
        let line = self.next()?;
        line.strip_prefix(key)
            .and_then(|rest| rest.strip_prefix(' '))
            .map(str::to_string)
            .ok_or_else(|| GmmError::ParseModel {
                line: self.line_no,
                reason: format!("expected `{key} ...`, got `{line}`"),
            })
    }

    fn bad(&self, reason: impl Into<String>) -> GmmError {
        GmmError::ParseModel { line: self.line_no, reason: reason.into() }
    }
}

fn parse_values<T: Scalar>(raw: &str, r: &LineReader<impl BufRead>) -> Result<Vec<T>, GmmError> {
    raw.split_whitespace()
        .map(|tok| {
            tok.parse::<f64>()
                .map(T::of)
                .map_err(|_| r.bad(format!("bad number `{tok}`")))
        })
        .collect()
}

/// Read a model from a reader.
pub fn read_gmm_from<T: Scalar>(reader: impl BufRead) -> Result<GmmModel<T>, GmmError> {
    let mut r = LineReader { inner: reader, line_no: 0 };
    let magic = r.next()?;
    if magic != MAGIC {
        return Err(r.bad(format!("expected `{MAGIC}` header")));
    }
    let kind = match r.field("structure")?.as_str() {
        "spherical" => CovKind::Spherical,
        "diagonal" => CovKind::Diagonal,
        "full" => CovKind::Full,
        other => return Err(r.bad(format!("unknown structure `{other}`"))),
    };
    let tied: bool =
        r.field("tied")?.parse().map_err(|_| r.bad("tied must be true/false"))?;
    let h: usize = r.field("h")?.parse().map_err(|_| r.bad("bad h"))?;
    let d: usize = r.field("d")?.parse().map_err(|_| r.bad("bad d"))?;
    let seed: u64 = r.field("seed")?.parse().map_err(|_| r.bad("bad seed"))?;
    let n_iter: usize = r.field("n_iter")?.parse().map_err(|_| r.bad("bad n_iter"))?;
    let loglik: f64 = r.field("loglik")?.parse().map_err(|_| r.bad("bad loglik"))?;
    let bic: f64 = r.field("bic")?.parse().map_err(|_| r.bad("bad bic"))?;
    let weights: Vec<T> = parse_values(&r.field("weights")?, &r)?;
    if weights.len() != h {
        return Err(r.bad(format!("expected {h} weights, got {}", weights.len())));
    }

    let mut components = Vec::with_capacity(h);
    for k in 0..h {
        let header = r.next()?;
        if header != format!("component {k}") {
            return Err(r.bad(format!("expected `component {k}`, got `{header}`")));
        }
        let mean: Vec<T> = parse_values(&r.field("mean")?, &r)?;
        if mean.len() != d {
            return Err(r.bad(format!("expected {d} mean values, got {}", mean.len())));
        }
        let mu = Array1::from_vec(mean);
        let cov: Vec<T> = parse_values(&r.field("cov")?, &r)?;
        let comp = match kind {
            CovKind::Spherical => {
                if cov.len() != 1 {
                    return Err(r.bad(format!("spherical cov needs 1 value, got {}", cov.len())));
                }
                GaussianComponent::from_spherical(mu, cov[0])?
            }
            CovKind::Diagonal => {
                if cov.len() != d {
                    return Err(r.bad(format!("diagonal cov needs {d} values, got {}", cov.len())));
                }
                GaussianComponent::from_diagonal(mu, Array1::from_vec(cov))?
            }
            CovKind::Full => {
                if cov.len() != d * d {
                    return Err(r.bad(format!(
                        "full cov needs {} values, got {}",
                        d * d,
                        cov.len()
                    )));
                }
                let sigma = Array2::from_shape_vec((d, d), cov).expect("checked length");
                GaussianComponent::from_full(mu, sigma)?
            }
        };
        components.push(comp);
    }
    let trailer = r.next()?;
    if trailer != "end" {
        return Err(r.bad("expected `end`"));
    }

    GmmModel::new(
        Array1::from_vec(weights),
        components,
        T::of(loglik),
        T::of(bic),
        CovarianceStructure::new(kind, tied),
        seed,
        vec![T::of(loglik)],
        n_iter,
    )
}

/// Read a model from a file.
pub fn read_gmm<T: Scalar>(path: &Path) -> Result<GmmModel<T>, GmmError> {
    read_gmm_from(BufReader::new(std::fs::File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{feature_labels, Granularity, ProfileMatrix};
    use crate::gmm::{assign, em_fit};

    fn fitted_model() -> (GmmModel<f64>, ProfileMatrix<f64>) {
        let mut rows = Vec::new();
        for i in 0..30 {
            let c = if i % 2 == 0 { -3.0 } else { 3.0 };
            rows.push(vec![c + (i as f64) * 0.01, c - (i as f64) * 0.02]);
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let data = ProfileMatrix::new(
            (0..30).map(|i| format!("r{i:02}")).collect(),
            Array2::from_shape_vec((30, 2), flat).unwrap(),
            feature_labels(2),
            Granularity::Disaggregated,
        )
        .unwrap();
        let st = CovarianceStructure::new(CovKind::Full, false);
        (em_fit(&data, 2, st, 77, 1e-8, 100).unwrap(), data)
    }

    #[test]
    fn round_trip_is_exact_and_labels_reproduce() {
        let (model, data) = fitted_model();
        let mut buf = Vec::new();
        write_gmm_to(&mut buf, &model).unwrap();
        let loaded: GmmModel<f64> = read_gmm_from(buf.as_slice()).unwrap();

        assert_eq!(loaded.weights, model.weights);
        assert_eq!(loaded.loglik, model.loglik);
        assert_eq!(loaded.bic, model.bic);
        assert_eq!(loaded.structure, model.structure);
        for (a, b) in loaded.components.iter().zip(&model.components) {
            assert_eq!(a.mu, b.mu);
            assert_eq!(a.sigma(), b.sigma());
        }
        let (l1, r1) = assign(&model, &data).unwrap();
        let (l2, r2) = assign(&loaded, &data).unwrap();
        assert_eq!(l1, l2);
        assert_eq!(r1, r2);

        // serialization is itself deterministic
        let mut buf2 = Vec::new();
        write_gmm_to(&mut buf2, &loaded).unwrap();
        assert_eq!(buf, buf2);
    }

    #[test]
    fn rejects_corrupted_files() {
        let (model, _) = fitted_model();
        let mut buf = Vec::new();
        write_gmm_to(&mut buf, &model).unwrap();
        let text = String::from_utf8(buf).unwrap();

        let broken = text.replace("profilecast-gmm v1", "other-format");
        assert!(matches!(
            read_gmm_from::<f64>(broken.as_bytes()),
            Err(GmmError::ParseModel { line: 1, .. })
        ));

        let truncated = &text[..text.len() / 2];
        assert!(read_gmm_from::<f64>(truncated.as_bytes()).is_err());
    }
}

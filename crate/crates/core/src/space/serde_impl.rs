//! JSON schema for points:
//!
//! ```json
//! {"space": "euclidean",  "coords": [0.0, 1.0]}
//! {"space": "sphere",     "coords": [0.0, 0.0, 1.0]}
//! {"space": "hyperbolic", "coords": [1.0, 0.0, 0.0]}
//! {"space": "quantile",   "values": [-1.0, 0.0, 1.0]}
//! {"space": "gaussian",   "mean": [0.0], "cov": [[1.0]]}
//! ```
//!
//! Deserialization validates the point invariants.

use nalgebra::{DMatrix, DVector};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use super::point::SpacePoint;

#[derive(Serialize, Deserialize)]
#[serde(tag = "space", rename_all = "snake_case", deny_unknown_fields)]
enum RawPoint {
    Euclidean { coords: Vec<f64> },
    Sphere { coords: Vec<f64> },
    Hyperbolic { coords: Vec<f64> },
    Quantile { values: Vec<f64> },
    Gaussian { mean: Vec<f64>, cov: Vec<Vec<f64>> },
}

impl Serialize for SpacePoint {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let raw = match self {
            SpacePoint::Euclidean(v) => RawPoint::Euclidean { coords: v.clone() },
            SpacePoint::Sphere(v) => RawPoint::Sphere { coords: v.clone() },
            SpacePoint::Hyperbolic(v) => RawPoint::Hyperbolic { coords: v.clone() },
            SpacePoint::Quantile(v) => RawPoint::Quantile { values: v.clone() },
            SpacePoint::Gaussian(g) => RawPoint::Gaussian {
                mean: g.mean().iter().copied().collect(),
                cov: g.cov().row_iter().map(|r| r.iter().copied().collect()).collect(),
            },
        };
        raw.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SpacePoint {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = RawPoint::deserialize(d)?;
        let point = match raw {
            RawPoint::Euclidean { coords } => SpacePoint::euclidean(coords),
            RawPoint::Sphere { coords } => SpacePoint::sphere(coords),
            RawPoint::Hyperbolic { coords } => SpacePoint::hyperbolic(coords),
            RawPoint::Quantile { values } => SpacePoint::quantile(values),
            RawPoint::Gaussian { mean, cov } => {
                let n = mean.len();
                if cov.len() != n || cov.iter().any(|r| r.len() != n) {
                    return Err(de::Error::custom(format!("gaussian cov must be {n}x{n}")));
                }
                SpacePoint::gaussian(DVector::from_vec(mean), DMatrix::from_fn(n, n, |i, j| cov[i][j]))
            }
        };
        point.map_err(de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_schema_round_trip() {
        let pts = [
            r#"{"space":"euclidean","coords":[0.0,1.5]}"#,
            r#"{"space":"sphere","coords":[0.0,0.0,1.0]}"#,
            r#"{"space":"hyperbolic","coords":[1.0,0.0]}"#,
            r#"{"space":"quantile","values":[-1.0,0.0,2.0]}"#,
            r#"{"space":"gaussian","mean":[0.0,1.0],"cov":[[2.0,0.5],[0.5,1.0]]}"#,
        ];
        for s in pts {
            let p: SpacePoint = serde_json::from_str(s).unwrap();
            let back = serde_json::to_string(&p).unwrap();
            assert_eq!(serde_json::from_str::<SpacePoint>(&back).unwrap(), p);
        }
    }

    #[test]
    fn json_rejects_invalid_points() {
        for s in [
            r#"{"space":"sphere","coords":[0.0,0.5,1.0]}"#,
            r#"{"space":"quantile","values":[1.0,0.0]}"#,
            r#"{"space":"gaussian","mean":[0.0],"cov":[[-1.0]]}"#,
            r#"{"space":"euclidean","coords":[0.0],"extra":1}"#,
            r#"{"space":"torus","coords":[0.0]}"#,
        ] {
            assert!(serde_json::from_str::<SpacePoint>(s).is_err(), "{s}");
        }
    }
}

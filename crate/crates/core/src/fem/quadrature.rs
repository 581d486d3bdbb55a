//! Symmetric quadrature rules on the reference triangle and Gauss rules on
//! edges.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
#[error("no quadrature rule of degree {0} (supported: 2, 4, 6)")]
pub struct UnsupportedDegree(pub usize);

/// Rule on the reference triangle `{(x, y) : x, y ≥ 0, x + y ≤ 1}`.
///
/// Points are stored as barycentric triples `(1 - x - y, x, y)`; weights
/// sum to the reference area 1/2.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    pub degree: usize,
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Reference coordinates `(x, y)` of point `q`
    pub fn xy(&self, q: usize) -> [f64; 2] {
        [self.points[q][1], self.points[q][2]]
    }
}

// Orbit parameters (weights already scaled to area 1/2).
const DEG4: [(f64, f64); 2] = [
    (0.111_690_794_839_005_732_847_503_5, 0.445_948_490_915_964_886_318_329_3),
    (0.054_975_871_827_660_933_819_163_16, 0.091_576_213_509_770_743_459_571_46),
];
const DEG6_S21: [(f64, f64); 2] = [
    (0.058_393_137_863_189_683_012_644_81, 0.249_286_745_170_910_421_291_638_6),
    (0.025_422_453_185_103_408_460_468_4, 0.063_089_014_491_502_228_340_331_6),
];
const DEG6_S111: (f64, f64, f64) = (
    0.041_425_537_809_186_787_596_776_73,
    0.053_145_049_844_816_947_353_249_67,
    0.310_352_451_033_784_405_416_607_7,
);

// Degree 8: centroid, three (w, a) orbits of `(1 − 2a, a, a)` and one
// six-point orbit; weights as printed sum to 1 and are halved below.
const DEG8_CENTROID: f64 = 0.144_315_607_677_787_168_251_1;
const DEG8_S21: [(f64, f64); 3] = [
    (0.095_091_634_267_284_624_793_9, 0.459_292_588_292_723_156_028_8),
    (0.103_217_370_534_718_250_281_8, 0.170_569_307_751_760_206_622_3),
    (0.032_458_497_623_198_080_310_93, 0.050_547_228_317_030_975_458_42),
];
const DEG8_S111: (f64, f64, f64) = (
    0.027_230_314_174_434_994_264_84,
    0.008_394_777_409_957_605_337_214,
    0.263_112_829_634_638_113_421_8,
);

/// Rule exact for all bivariate polynomials up to `degree`
pub fn quadrature(degree: usize) -> Result<QuadratureRule, UnsupportedDegree> {
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let mut orbit3 = |w: f64, a: f64| {
        let c = 1.0 - 2.0 * a;
        for p in [[c, a, a], [a, c, a], [a, a, c]] {
            points.push(p);
            weights.push(w);
        }
    };
    match degree {
        2 => orbit3(1.0 / 6.0, 1.0 / 6.0),
        4 => DEG4.iter().for_each(|&(w, a)| orbit3(w, a)),
        6 => {
            DEG6_S21.iter().for_each(|&(w, a)| orbit3(w, a));
            let (w, a, b) = DEG6_S111;
            let c = 1.0 - a - b;
            for p in [[c, a, b], [c, b, a], [b, a, c], [a, b, c], [b, c, a], [a, c, b]] {
                points.push(p);
                weights.push(w);
            }
        }
        8 => {
            DEG8_S21.iter().for_each(|&(w, a)| orbit3(0.5 * w, a));
            points.push([1.0 / 3.0; 3]);
            weights.push(0.5 * DEG8_CENTROID);
            let (w, a, b) = DEG8_S111;
            let c = 1.0 - a - b;
            for p in [[c, a, b], [c, b, a], [b, a, c], [a, b, c], [b, c, a], [a, c, b]] {
                points.push(p);
                weights.push(0.5 * w);
            }
        }
        d => return Err(UnsupportedDegree(d)),
    }
    Ok(QuadratureRule { degree, points, weights })
}

/// Three-point Gauss–Legendre rule on `[0, 1]` (exact to degree 5):
/// `(s, w)` pairs with weights summing to 1.
pub fn edge_gauss3() -> [(f64, f64); 3] {
    let r = (0.6f64).sqrt() / 2.0;
    [(0.5 - r, 5.0 / 18.0), (0.5, 8.0 / 18.0), (0.5 + r, 5.0 / 18.0)]
}

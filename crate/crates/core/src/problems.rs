//! Problem instances: Euclidean distance matrix completion, the two 3x3
//! counterexamples, and the versioned plain-text instance format.
//!
//! # File format (v1)
//!
//! ```text
//! sdcmpcc-instance v1 n=<n> m=<m> kind=<kind> seed=<seed>
//! meta n_points=<int> n_samples=<int> dim=<int> ground_truth_rank=<int|none>
//! constraint <i> b=<value>
//! <row> <col> <value>          (one line per upper-triangle entry of A_i)
//! ...
//! matrix ground_truth          (optional, followed by n rows of n values)
//! optimum objective=<value> rho=<value|none>   (optional)
//! matrix optimum_x             (required after `optimum`)
//! matrix optimum_u             (optional)
//! end
//! ```
//!
//! Floats are written with 17 significant digits so that a save/load cycle
//! reproduces every value bit for bit. The trailing `end` line guards
//! against truncated files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::affine::{AffineOperator, SparseSym};
use crate::error::{Error, Result};
use crate::symmat::SymmetricMatrix;

pub const FORMAT_MAGIC: &str = "sdcmpcc-instance";
pub const FORMAT_VERSION: &str = "v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstanceKind {
    Edm,
    CounterexampleSdp,
    CounterexamplePenalty,
    Generic,
}

impl InstanceKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            InstanceKind::Edm => "edm",
            InstanceKind::CounterexampleSdp => "counterexample_sdp",
            InstanceKind::CounterexamplePenalty => "counterexample_penalty",
            InstanceKind::Generic => "generic",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "edm" => Some(InstanceKind::Edm),
            "counterexample_sdp" => Some(InstanceKind::CounterexampleSdp),
            "counterexample_penalty" => Some(InstanceKind::CounterexamplePenalty),
            "generic" => Some(InstanceKind::Generic),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceMeta {
    pub kind: InstanceKind,
    pub seed: u64,
    pub n_points: usize,
    pub n_samples: usize,
    pub dim: usize,
    pub ground_truth_rank: Option<usize>,
}

impl InstanceMeta {
    pub fn generic() -> Self {
        Self {
            kind: InstanceKind::Generic,
            seed: 0,
            n_points: 0,
            n_samples: 0,
            dim: 0,
            ground_truth_rank: None,
        }
    }
}

/// Analytically known optimum attached to a hand-built instance.
#[derive(Debug, Clone, PartialEq)]
pub struct KnownOptimum {
    pub objective: f64,
    /// Penalty parameter the objective refers to, if any.
    pub rho: Option<f64>,
    pub x: SymmetricMatrix,
    pub u: Option<SymmetricMatrix>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub op: AffineOperator,
    pub meta: InstanceMeta,
    pub ground_truth: Option<SymmetricMatrix>,
    pub optimum: Option<KnownOptimum>,
}

impl Instance {
    pub fn generic(op: AffineOperator) -> Self {
        Self {
            op,
            meta: InstanceMeta::generic(),
            ground_truth: None,
            optimum: None,
        }
    }

    pub fn n(&self) -> usize {
        self.op.n()
    }

    pub fn m(&self) -> usize {
        self.op.m()
    }

    pub fn b(&self) -> &nalgebra::DVector<f64> {
        self.op.rhs()
    }
}

/// Point coordinates, one row per point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub points: DMatrix<f64>,
}

impl PointCloud {
    pub fn n_points(&self) -> usize {
        self.points.nrows()
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    /// Gram matrix `B = P P^T`.
    pub fn gram(&self) -> SymmetricMatrix {
        SymmetricMatrix::symmetrized(&self.points * self.points.transpose())
    }

    pub fn squared_distance(&self, i: usize, j: usize) -> f64 {
        (self.points.row(i) - self.points.row(j)).norm_squared()
    }
}

/// Random EDM completion instance: `n_points` uniform points in `[0, 1]^dim`
/// and `n_samples` distinct unordered pairs, each giving the constraint
/// `B_ii + B_jj - 2 B_ij = ||x_i - x_j||^2`.
pub fn gen_edm_instance(n_points: usize, n_samples: usize, dim: usize, seed: u64) -> Result<(Instance, PointCloud)> {
    if n_points < 2 {
        return Err(Error::InvalidArgument("need at least two points".into()));
    }
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    let total = n_points * (n_points - 1) / 2;
    if n_samples == 0 || n_samples > total {
        return Err(Error::InvalidArgument(format!(
            "n_samples must lie in [1, {total}] for {n_points} points, got {n_samples}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = DMatrix::from_fn(n_points, dim, |_, _| rng.random::<f64>());
    let cloud = PointCloud { points };

    let mut chosen: Vec<usize> = rand::seq::index::sample(&mut rng, total, n_samples).into_vec();
    chosen.sort_unstable();
    let pairs = pair_table(n_points);
    let mut coeffs = Vec::with_capacity(n_samples);
    let mut rhs = Vec::with_capacity(n_samples);
    for idx in chosen {
        let (i, j) = pairs[idx];
        coeffs.push(SparseSym::new(n_points, vec![(i, i, 1.0), (j, j, 1.0), (i, j, -1.0)])?);
        rhs.push(cloud.squared_distance(i, j));
    }
    let op = AffineOperator::new(n_points, coeffs, rhs)?;
    let instance = Instance {
        op,
        meta: InstanceMeta {
            kind: InstanceKind::Edm,
            seed,
            n_points,
            n_samples,
            dim,
            ground_truth_rank: Some(dim),
        },
        ground_truth: Some(cloud.gram()),
        optimum: None,
    };
    Ok((instance, cloud))
}

/// Builds an EDM instance from explicit points and pairs.
pub fn edm_instance_from_points(cloud: &PointCloud, pairs: &[(usize, usize)]) -> Result<Instance> {
    let n = cloud.n_points();
    let mut coeffs = Vec::with_capacity(pairs.len());
    let mut rhs = Vec::with_capacity(pairs.len());
    for &(i, j) in pairs {
        if i == j {
            return Err(Error::InvalidArgument(format!("self-pair ({i}, {i})")));
        }
        coeffs.push(SparseSym::new(n, vec![(i, i, 1.0), (j, j, 1.0), (i.min(j), i.max(j), -1.0)])?);
        rhs.push(cloud.squared_distance(i, j));
    }
    Ok(Instance {
        op: AffineOperator::new(n, coeffs, rhs)?,
        meta: InstanceMeta {
            kind: InstanceKind::Edm,
            seed: 0,
            n_points: n,
            n_samples: pairs.len(),
            dim: cloud.dim(),
            ground_truth_rank: Some(cloud.dim()),
        },
        ground_truth: Some(cloud.gram()),
        optimum: None,
    })
}

/// Per-instance seed: the splitmix64 output for `base + index`.
///
/// `derive_seed(base, i)` mixes `base + (i + 1) * 0x9E3779B97F4A7C15` through
/// the splitmix64 finalizer, so neighbouring indices give unrelated streams.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn pair_table(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect()
}

/// The two 3x3 counterexamples, in order:
///
/// 1. `counterexample_sdp`: `minimize x2` subject to
///    `[[x2 + 1, 0, 0], [0, x1, x2], [0, x2, 0]] psd`; every `(x1, 0)` with
///    `x1 >= 0` is optimal with value 0. Encoded as
///    `X12 = X13 = X33 = 0`, `X11 - X23 = 1`, leaving `X22 = x1` free.
/// 2. `counterexample_penalty`: `X = [[3 + x, 0, 0], [0, 1 - x, x/2], [0, x/2, 0]]`
///    encoded as `X12 = X13 = X33 = 0`, `X11 + X22 = 4`, `X22 + 2 X23 = 1`.
///    Feasibility forces `x = 0`; with `rho = 0.5` the penalty optimum is
///    `X = diag(3, 1, 0)`, `U = diag(0, 1, 1)`, objective 1.5.
pub fn counterexample_instances() -> Vec<Instance> {
    let zero_pattern = || {
        vec![
            vec![(0, 1, 1.0)],
            vec![(0, 2, 1.0)],
            vec![(2, 2, 1.0)],
        ]
    };

    let mut sdp = zero_pattern();
    sdp.push(vec![(0, 0, 1.0), (1, 2, -0.5)]);
    let sdp_op = AffineOperator::from_triples(3, sdp, vec![0.0, 0.0, 0.0, 1.0]).expect("static instance");

    let mut pen = zero_pattern();
    pen.push(vec![(0, 0, 1.0), (1, 1, 1.0)]);
    pen.push(vec![(1, 1, 1.0), (1, 2, 1.0)]);
    let pen_op = AffineOperator::from_triples(3, pen, vec![0.0, 0.0, 0.0, 4.0, 1.0]).expect("static instance");

    let meta = |kind| InstanceMeta {
        kind,
        ..InstanceMeta::generic()
    };
    vec![
        Instance {
            op: sdp_op,
            meta: meta(InstanceKind::CounterexampleSdp),
            ground_truth: None,
            optimum: Some(KnownOptimum {
                objective: 0.0,
                rho: None,
                x: SymmetricMatrix::from_diagonal(&[1.0, 0.0, 0.0]),
                u: None,
            }),
        },
        Instance {
            op: pen_op,
            meta: meta(InstanceKind::CounterexamplePenalty),
            ground_truth: None,
            optimum: Some(KnownOptimum {
                objective: 1.5,
                rho: Some(0.5),
                x: SymmetricMatrix::from_diagonal(&[3.0, 1.0, 0.0]),
                u: Some(SymmetricMatrix::from_diagonal(&[0.0, 1.0, 1.0])),
            }),
        },
    ]
}

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_matrix(out: &mut String, name: &str, m: &SymmetricMatrix) {
    let _ = writeln!(out, "matrix {name}");
    for i in 0..m.n() {
        let row: Vec<String> = (0..m.n()).map(|j| fmt_f64(m.get(i, j))).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
}

/// Serializes an instance to the v1 text format.
pub fn write_instance(inst: &Instance) -> String {
    let mut out = String::new();
    let meta = &inst.meta;
    let _ = writeln!(
        out,
        "{FORMAT_MAGIC} {FORMAT_VERSION} n={} m={} kind={} seed={}",
        inst.n(),
        inst.m(),
        meta.kind.as_str(),
        meta.seed
    );
    let _ = writeln!(
        out,
        "meta n_points={} n_samples={} dim={} ground_truth_rank={}",
        meta.n_points,
        meta.n_samples,
        meta.dim,
        meta.ground_truth_rank.map_or("none".to_string(), |r| r.to_string())
    );
    for (i, (a, b)) in inst.op.coeffs().iter().zip(inst.op.rhs().iter()).enumerate() {
        let _ = writeln!(out, "constraint {i} b={}", fmt_f64(*b));
        for &(r, c, v) in a.entries() {
            let _ = writeln!(out, "{r} {c} {}", fmt_f64(v));
        }
    }
    if let Some(gt) = &inst.ground_truth {
        write_matrix(&mut out, "ground_truth", gt);
    }
    if let Some(opt) = &inst.optimum {
        let _ = writeln!(
            out,
            "optimum objective={} rho={}",
            fmt_f64(opt.objective),
            opt.rho.map_or("none".to_string(), fmt_f64)
        );
        write_matrix(&mut out, "optimum_x", &opt.x);
        if let Some(u) = &opt.u {
            write_matrix(&mut out, "optimum_u", u);
        }
    }
    out.push_str("end\n");
    out
}

pub fn save_instance(inst: &Instance, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, write_instance(inst))?;
    Ok(())
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<Instance> {
    read_instance(&fs::read_to_string(path)?)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Option<(usize, &'a str)> {
        for (i, l) in self.inner.by_ref() {
            self.last = i + 1;
            let t = l.trim();
            if !t.is_empty() {
                return Some((i + 1, t));
            }
        }
        None
    }

    fn expect(&mut self, what: &str) -> Result<(usize, &'a str)> {
        let last = self.last;
        self.next()
            .ok_or_else(|| Error::parse(last + 1, format!("unexpected end of file, expected {what}")))
    }
}

/// Looks up `key=value` among whitespace-separated fields.
fn field<'a>(line_no: usize, fields: &[&'a str], key: &str) -> Result<&'a str> {
    fields
        .iter()
        .find_map(|f| f.strip_prefix(key).and_then(|rest| rest.strip_prefix('=')))
        .ok_or_else(|| Error::parse(line_no, format!("missing field `{key}`")))
}

fn parse_num<T: std::str::FromStr>(line_no: usize, key: &str, s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::parse(line_no, format!("invalid value `{s}` for `{key}`")))
}

fn parse_opt<T: std::str::FromStr>(line_no: usize, key: &str, s: &str) -> Result<Option<T>> {
    if s == "none" {
        Ok(None)
    } else {
        parse_num(line_no, key, s).map(Some)
    }
}

fn read_matrix(lines: &mut Lines<'_>, n: usize) -> Result<SymmetricMatrix> {
    let mut data = DMatrix::zeros(n, n);
    for i in 0..n {
        let (ln, l) = lines.expect("matrix row")?;
        let vals: Vec<&str> = l.split_whitespace().collect();
        if vals.len() != n {
            return Err(Error::parse(ln, format!("expected {n} values in matrix row, found {}", vals.len())));
        }
        for (j, v) in vals.iter().enumerate() {
            data[(i, j)] = parse_num(ln, "matrix entry", v)?;
        }
    }
    Ok(SymmetricMatrix::symmetrized(data))
}

/// Parses the v1 text format.
pub fn read_instance(text: &str) -> Result<Instance> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        last: 0,
    };
    let (ln, header) = lines.expect("header")?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.first() != Some(&FORMAT_MAGIC) {
        return Err(Error::parse(ln, format!("missing `{FORMAT_MAGIC}` header")));
    }
    match fields.get(1) {
        Some(&FORMAT_VERSION) => {}
        Some(v) => return Err(Error::UnsupportedVersion(v.to_string())),
        None => return Err(Error::parse(ln, "missing version")),
    }
    let n: usize = parse_num(ln, "n", field(ln, &fields, "n")?)?;
    let m: usize = parse_num(ln, "m", field(ln, &fields, "m")?)?;
    let kind_s = field(ln, &fields, "kind")?;
    let kind = InstanceKind::parse(kind_s).ok_or_else(|| Error::parse(ln, format!("unknown kind `{kind_s}`")))?;
    let seed: u64 = parse_num(ln, "seed", field(ln, &fields, "seed")?)?;
    if n == 0 {
        return Err(Error::parse(ln, "matrix order must be positive"));
    }

    let (ln, meta_line) = lines.expect("meta line")?;
    let mf: Vec<&str> = meta_line.split_whitespace().collect();
    if mf.first() != Some(&"meta") {
        return Err(Error::parse(ln, "expected `meta` line"));
    }
    let meta = InstanceMeta {
        kind,
        seed,
        n_points: parse_num(ln, "n_points", field(ln, &mf, "n_points")?)?,
        n_samples: parse_num(ln, "n_samples", field(ln, &mf, "n_samples")?)?,
        dim: parse_num(ln, "dim", field(ln, &mf, "dim")?)?,
        ground_truth_rank: parse_opt(ln, "ground_truth_rank", field(ln, &mf, "ground_truth_rank")?)?,
    };

    let mut triples: Vec<Vec<(usize, usize, f64)>> = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    let mut ground_truth = None;
    let mut optimum: Option<KnownOptimum> = None;
    let mut pending: Option<(usize, &str)> = None;

    loop {
        let (ln, l) = match pending.take() {
            Some(p) => p,
            None => lines.expect("`end`")?,
        };
        let mut tok = l.split_whitespace();
        let head = tok.next().unwrap_or_default();
        match head {
            "end" => break,
            "constraint" => {
                let idx: usize = parse_num(ln, "constraint index", tok.next().unwrap_or_default())?;
                if idx != triples.len() {
                    return Err(Error::parse(ln, format!("expected constraint {}, found {idx}", triples.len())));
                }
                let rest: Vec<&str> = tok.collect();
                rhs.push(parse_num(ln, "b", field(ln, &rest, "b")?)?);
                let mut entries = Vec::new();
                loop {
                    let (tl, t) = lines.expect("`end`")?;
                    if !t.starts_with(|c: char| c.is_ascii_digit()) {
                        pending = Some((tl, t));
                        break;
                    }
                    let parts: Vec<&str> = t.split_whitespace().collect();
                    if parts.len() != 3 {
                        return Err(Error::parse(tl, "expected `<row> <col> <value>`"));
                    }
                    entries.push((
                        parse_num(tl, "row", parts[0])?,
                        parse_num(tl, "col", parts[1])?,
                        parse_num(tl, "value", parts[2])?,
                    ));
                }
                triples.push(entries);
            }
            "matrix" => match tok.next() {
                Some("ground_truth") => ground_truth = Some(read_matrix(&mut lines, n)?),
                Some("optimum_x") => {
                    let opt = optimum
                        .as_mut()
                        .ok_or_else(|| Error::parse(ln, "`optimum_x` before `optimum` line"))?;
                    opt.x = read_matrix(&mut lines, n)?;
                }
                Some("optimum_u") => {
                    let opt = optimum
                        .as_mut()
                        .ok_or_else(|| Error::parse(ln, "`optimum_u` before `optimum` line"))?;
                    opt.u = Some(read_matrix(&mut lines, n)?);
                }
                other => return Err(Error::parse(ln, format!("unknown matrix block {other:?}"))),
            },
            "optimum" => {
                let rest: Vec<&str> = tok.collect();
                optimum = Some(KnownOptimum {
                    objective: parse_num(ln, "objective", field(ln, &rest, "objective")?)?,
                    rho: parse_opt(ln, "rho", field(ln, &rest, "rho")?)?,
                    x: SymmetricMatrix::zeros(n),
                    u: None,
                });
            }
            other => return Err(Error::parse(ln, format!("unexpected line starting with `{other}`"))),
        }
    }

    if triples.len() != m {
        return Err(Error::parse(lines.last, format!("header declares m={m}, found {} constraints", triples.len())));
    }
    let op = AffineOperator::from_triples(n, triples, rhs).map_err(|e| Error::parse(lines.last, e.to_string()))?;
    Ok(Instance {
        op,
        meta,
        ground_truth,
        optimum,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::palm::objective;
    use crate::symmat::rank_above;
    use std::collections::HashSet;

    #[test]
    fn two_point_instance() {
        let cloud = PointCloud {
            points: DMatrix::from_row_slice(2, 3, &[0.0, 0.0, 0.0, 1.0, 0.0, 0.0]),
        };
        let inst = edm_instance_from_points(&cloud, &[(0, 1)]).unwrap();
        assert_eq!(inst.b().as_slice(), &[1.0]);
        let b = SymmetricMatrix::from_diagonal(&[0.0, 1.0]);
        assert_eq!(inst.op.apply(&b).unwrap().as_slice(), &[1.0]);
        let back = read_instance(&write_instance(&inst)).unwrap();
        assert_eq!(back, inst);
    }

    #[test]
    fn edm_default_sized_instance() {
        let (inst, cloud) = gen_edm_instance(50, 150, 3, 4).unwrap();
        assert_eq!(inst.m(), 150);
        assert_eq!(inst.meta.ground_truth_rank, Some(3));
        let gt = inst.ground_truth.as_ref().unwrap();
        assert!(inst.op.residual_inf(gt).unwrap() <= 1e-12);
        assert_eq!(rank_above(gt, 0.01).unwrap(), 3);
        assert_eq!(&cloud.gram(), gt);
    }

    #[test]
    fn edm_pairs_distinct() {
        for seed in 0..20 {
            let (inst, _) = gen_edm_instance(12, 40, 2, seed).unwrap();
            let mut seen = HashSet::new();
            for a in inst.op.coeffs() {
                let off: Vec<_> = a.entries().iter().filter(|e| e.0 != e.1).collect();
                assert_eq!(off.len(), 1, "no self pairs");
                assert!(seen.insert((off[0].0, off[0].1)));
            }
        }
    }

    #[test]
    fn edm_is_deterministic() {
        let a = write_instance(&gen_edm_instance(20, 30, 3, 99).unwrap().0);
        let b = write_instance(&gen_edm_instance(20, 30, 3, 99).unwrap().0);
        assert_eq!(a, b);
        let c = write_instance(&gen_edm_instance(20, 30, 3, 100).unwrap().0);
        assert_ne!(a, c);
    }

    #[test]
    fn edm_rejects_bad_sizes() {
        assert!(gen_edm_instance(5, 11, 3, 0).is_err());
        assert!(gen_edm_instance(5, 0, 3, 0).is_err());
        assert!(gen_edm_instance(5, 3, 0, 0).is_err());
        assert!(gen_edm_instance(5, 10, 3, 0).is_ok());
    }

    #[test]
    fn counterexample_optimum() {
        let cx = counterexample_instances();
        assert_eq!(cx.len(), 2);
        let pen = &cx[1];
        assert_eq!(pen.meta.kind, InstanceKind::CounterexamplePenalty);
        assert_eq!(pen.m(), 5);
        let opt = pen.optimum.as_ref().unwrap();
        assert_eq!(objective(&opt.x, opt.u.as_ref().unwrap(), opt.rho.unwrap(), 0.0), 1.5);
        assert_eq!(pen.op.residual_inf(&opt.x).unwrap(), 0.0);

        // X(x) = [[3 + x, 0, 0], [0, 1 - x, x/2], [0, x/2, 0]] satisfies the
        // equalities for every x; PSD forces x = 0
        for x in [-0.5, 0.2, 1.0] {
            let xm = SymmetricMatrix::from_rows(&[
                vec![3.0 + x, 0.0, 0.0],
                vec![0.0, 1.0 - x, x / 2.0],
                vec![0.0, x / 2.0, 0.0],
            ])
            .unwrap();
            assert!(pen.op.residual_inf(&xm).unwrap() < 1e-15);
            assert!(xm.min_eigenvalue().unwrap() < 0.0);
        }

        let sdp = &cx[0];
        assert_eq!(sdp.meta.kind, InstanceKind::CounterexampleSdp);
        let o = sdp.optimum.as_ref().unwrap();
        assert_eq!(o.objective, 0.0);
        for x1 in [0.0, 0.7, 2.0] {
            let g = SymmetricMatrix::from_diagonal(&[1.0, x1, 0.0]);
            assert!(sdp.op.residual_inf(&g).unwrap() < 1e-15);
        }
    }

    #[test]
    fn seed_derivation() {
        // reference values of the splitmix64 sequence seeded with 0
        assert_eq!(derive_seed(0, 0), 0xE220_A839_7B1D_CDAF);
        assert_eq!(derive_seed(0, 1), 0x6E78_9E6A_A1B9_65F4);
        let seeds: HashSet<u64> = (0..1000).map(|i| derive_seed(42, i)).collect();
        assert_eq!(seeds.len(), 1000);
    }

    #[test]
    fn round_trips() {
        for inst in counterexample_instances() {
            assert_eq!(read_instance(&write_instance(&inst)).unwrap(), inst);
        }
        let (edm, _) = gen_edm_instance(10, 20, 3, 1).unwrap();
        assert_eq!(read_instance(&write_instance(&edm)).unwrap(), edm);
    }

    #[test]
    fn truncated_file_is_rejected() {
        let text = write_instance(&counterexample_instances()[1]);
        let lines: Vec<&str> = text.lines().collect();
        for cut in 1..lines.len() {
            let partial = lines[..cut].join("\n");
            assert!(matches!(read_instance(&partial), Err(Error::Parse { .. })), "cut at {cut}");
        }
    }

    #[test]
    fn version_mismatch_is_explicit() {
        let text = write_instance(&counterexample_instances()[0]).replacen(" v1 ", " v2 ", 1);
        assert!(matches!(read_instance(&text), Err(Error::UnsupportedVersion(v)) if v == "v2"));
    }

    #[test]
    fn malformed_fields_report_line() {
        let text = write_instance(&counterexample_instances()[0]).replacen("b=0.0000000000000000e0", "b=zero", 1);
        match read_instance(&text) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("b"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}

//! Finite-dimensional state algebra over labelled tensor-product bases.
//!
//! Every subsystem carries one [`BasisFamily`]. Basis indices are big-endian:
//! subsystem 0 is the most significant digit of the flat index, which is the
//! ordering produced by the Kronecker product.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::{Error, Result};

const RANK_TOL: f64 = 1e-14;
const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
const PSD_FLOOR: f64 = -1e-10;
const CPTP_TOL: f64 = 1e-10;

/// The label family of one subsystem.
///
/// Families with a leading `0` level carry an explicit vacuum (no photon in
/// the mode, or no excitation in the ensemble).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BasisFamily {
    /// Photon polarization `{H, V}`.
    Linear,
    /// Photon circular polarization `{σ−, σ+}`.
    Circular,
    /// Stored collective spin excitation `{c−, c+}`.
    Spin,
    /// Photon number of a single mode `{0, 1}`.
    Number,
    /// Atomic ensemble `{c0, c−, c+}` where `c0` is the unexcited ensemble.
    Ensemble,
    /// Photonic mode `{0, H, V}`.
    LinearMode,
    /// Photonic mode `{0, σ−, σ+}`.
    CircularMode,
}

impl BasisFamily {
    pub const ALL: [BasisFamily; 7] = [
        BasisFamily::Linear,
        BasisFamily::Circular,
        BasisFamily::Spin,
        BasisFamily::Number,
        BasisFamily::Ensemble,
        BasisFamily::LinearMode,
        BasisFamily::CircularMode,
    ];

    pub fn dim(self) -> usize {
        self.symbols().len()
    }

    /// ASCII symbols used in the text format; `s-`/`s+` stand for σ−/σ+.
    pub fn symbols(self) -> &'static [&'static str] {
        match self {
            BasisFamily::Linear => &["H", "V"],
            BasisFamily::Circular => &["s-", "s+"],
            BasisFamily::Spin => &["c-", "c+"],
            BasisFamily::Number => &["0", "1"],
            BasisFamily::Ensemble => &["c0", "c-", "c+"],
            BasisFamily::LinearMode => &["0", "H", "V"],
            BasisFamily::CircularMode => &["0", "s-", "s+"],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BasisFamily::Linear => "linear",
            BasisFamily::Circular => "circular",
            BasisFamily::Spin => "spin",
            BasisFamily::Number => "number",
            BasisFamily::Ensemble => "ensemble",
            BasisFamily::LinearMode => "linear-mode",
            BasisFamily::CircularMode => "circular-mode",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == name)
    }

    /// Index of `symbol` within this family.
    pub fn index_of(self, symbol: &str) -> Option<usize> {
        self.symbols().iter().position(|s| *s == symbol)
    }

    /// Polarization-carrying photonic families.
    pub fn is_polarization(self) -> bool {
        matches!(
            self,
            BasisFamily::Linear | BasisFamily::Circular | BasisFamily::LinearMode | BasisFamily::CircularMode
        )
    }

    /// Families whose level 0 is the vacuum.
    pub fn has_vacuum(self) -> bool {
        matches!(
            self,
            BasisFamily::Ensemble | BasisFamily::LinearMode | BasisFamily::CircularMode
        )
    }

    /// The vacuum-extended family (`H/V` → `0/H/V`, ...). Families that already
    /// carry a vacuum map to themselves.
    pub fn with_vacuum(self) -> Option<Self> {
        match self {
            BasisFamily::Linear | BasisFamily::LinearMode => Some(BasisFamily::LinearMode),
            BasisFamily::Circular | BasisFamily::CircularMode => Some(BasisFamily::CircularMode),
            BasisFamily::Spin | BasisFamily::Ensemble => Some(BasisFamily::Ensemble),
            BasisFamily::Number => None,
        }
    }

    /// Inverse of [`with_vacuum`](Self::with_vacuum).
    pub fn without_vacuum(self) -> Option<Self> {
        match self {
            BasisFamily::LinearMode => Some(BasisFamily::Linear),
            BasisFamily::CircularMode => Some(BasisFamily::Circular),
            BasisFamily::Ensemble => Some(BasisFamily::Spin),
            _ => None,
        }
    }
}

/// Quarter-wave-plate direction: `In` converts H/V to σ−/σ+, `Out` converts back.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    In,
    Out,
}

fn total_dim(families: &[BasisFamily]) -> usize {
    families.iter().map(|f| f.dim()).product()
}

fn dims_of(families: &[BasisFamily]) -> Vec<usize> {
    families.iter().map(|f| f.dim()).collect()
}

/// Big-endian digits of a flat index.
fn digits(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for (k, &d) in dims.iter().enumerate().rev() {
        out[k] = index % d;
        index /= d;
    }
    out
}

fn flat_index(digits: &[usize], dims: &[usize]) -> usize {
    digits.iter().zip(dims).fold(0, |acc, (&i, &d)| acc * d + i)
}

fn label_string(families: &[BasisFamily], index: usize) -> String {
    let dims = dims_of(families);
    digits(index, &dims)
        .iter()
        .zip(families)
        .map(|(&i, f)| f.symbols()[i])
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_label(families: &[BasisFamily], label: &str, line: usize) -> Result<usize> {
    let tokens: Vec<&str> = label.split(',').collect();
    if tokens.len() != families.len() {
        return Err(Error::Parse {
            line,
            message: format!("expected {} labels, found {}", families.len(), tokens.len()),
        });
    }
    let mut idx = Vec::with_capacity(tokens.len());
    for (k, (tok, fam)) in tokens.iter().zip(families).enumerate() {
        let i = fam.index_of(tok).ok_or_else(|| Error::Parse {
            line,
            message: format!("label {tok:?} is not in the {} family of subsystem {k}", fam.name()),
        })?;
        idx.push(i);
    }
    Ok(flat_index(&idx, &dims_of(families)))
}

fn families_header(families: &[BasisFamily]) -> String {
    let names: Vec<&str> = families.iter().map(|f| f.name()).collect();
    format!("# families {}\n", names.join(","))
}

fn parse_families_header(line: &str, line_no: usize) -> Result<Vec<BasisFamily>> {
    let rest = line.strip_prefix("# families ").ok_or_else(|| Error::Parse {
        line: line_no,
        message: "missing '# families' header".into(),
    })?;
    rest.trim()
        .split(',')
        .map(|n| {
            BasisFamily::from_name(n).ok_or_else(|| Error::Parse {
                line: line_no,
                message: format!("unknown family {n:?}"),
            })
        })
        .collect()
}

fn parse_f64(tok: Option<&str>, line: usize) -> Result<f64> {
    let tok = tok.ok_or_else(|| Error::Parse {
        line,
        message: "missing numeric field".into(),
    })?;
    tok.parse().map_err(|_| Error::Parse {
        line,
        message: format!("cannot parse {tok:?} as a number"),
    })
}

/// Relabels photonic subsystems through a quarter-wave plate.
pub fn waveplate_families(families: &[BasisFamily], direction: Direction) -> Result<Vec<BasisFamily>> {
    use BasisFamily::*;
    families
        .iter()
        .enumerate()
        .map(|(k, &f)| match (direction, f) {
            (Direction::In, Linear) => Ok(Circular),
            (Direction::In, LinearMode) => Ok(CircularMode),
            (Direction::Out, Circular) => Ok(Linear),
            (Direction::Out, CircularMode) => Ok(LinearMode),
            (Direction::In, Circular | CircularMode) => Err(Error::FamilyMismatch {
                subsystem: k,
                expected: "linear",
                found: f.name(),
            }),
            (Direction::Out, Linear | LinearMode) => Err(Error::FamilyMismatch {
                subsystem: k,
                expected: "circular",
                found: f.name(),
            }),
            (_, other) => Ok(other),
        })
        .collect()
}

/// A normalized pure state.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    families: Vec<BasisFamily>,
    amplitudes: Vec<Complex64>,
}

impl PureState {
    /// Builds a state from raw amplitudes, normalizing them.
    pub fn new(families: Vec<BasisFamily>, amplitudes: Vec<Complex64>) -> Result<Self> {
        let expected = total_dim(&families);
        if amplitudes.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: amplitudes.len(),
            });
        }
        if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::InvalidState("non-finite amplitude".into()));
        }
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero vector".into()));
        }
        let amplitudes = amplitudes.into_iter().map(|a| a / norm).collect();
        Ok(Self { families, amplitudes })
    }

    /// A computational basis state given one level index per subsystem.
    pub fn basis(families: Vec<BasisFamily>, levels: &[usize]) -> Result<Self> {
        if levels.len() != families.len() {
            return Err(Error::DimensionMismatch {
                expected: families.len(),
                found: levels.len(),
            });
        }
        for (k, (&l, f)) in levels.iter().zip(&families).enumerate() {
            if l >= f.dim() {
                return Err(Error::InvalidIndex {
                    index: l,
                    count: f.dim(),
                });
            }
            let _ = k;
        }
        let dims = dims_of(&families);
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); total_dim(&families)];
        amplitudes[flat_index(levels, &dims)] = Complex64::new(1.0, 0.0);
        Ok(Self { families, amplitudes })
    }

    /// A product basis state from symbols, e.g. `[(Linear, "H"), (Linear, "V")]`.
    pub fn from_labels(labels: &[(BasisFamily, &str)]) -> Result<Self> {
        let families: Vec<_> = labels.iter().map(|(f, _)| *f).collect();
        let levels = labels
            .iter()
            .enumerate()
            .map(|(k, (f, s))| {
                f.index_of(s)
                    .ok_or_else(|| Error::InvalidState(format!("{s:?} is not a {} label (subsystem {k})", f.name())))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::basis(families, &levels)
    }

    pub fn families(&self) -> &[BasisFamily] {
        &self.families
    }

    pub fn dims(&self) -> Vec<usize> {
        dims_of(&self.families)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Amplitude of the basis state with the given per-subsystem levels.
    pub fn amplitude(&self, levels: &[usize]) -> Complex64 {
        self.amplitudes[flat_index(levels, &self.dims())]
    }

    /// Amplitude addressed by a comma-separated label string such as `"H,V,H,V"`.
    pub fn amplitude_of(&self, label: &str) -> Result<Complex64> {
        let idx = parse_label(&self.families, label, 0)?;
        Ok(self.amplitudes[idx])
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &PureState) -> Result<Complex64> {
        if self.families != other.families {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Equality up to a global phase.
    pub fn approx_eq_up_to_phase(&self, other: &PureState, tol: f64) -> bool {
        match self.inner(other) {
            Ok(ov) => (1.0 - ov.norm()).abs() <= tol,
            Err(_) => false,
        }
    }

    pub fn tensor(&self, other: &PureState) -> PureState {
        let mut families = self.families.clone();
        families.extend_from_slice(&other.families);
        let mut amplitudes = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amplitudes {
            for b in &other.amplitudes {
                amplitudes.push(a * b);
            }
        }
        PureState { families, amplitudes }
    }

    /// Relabels families while keeping amplitudes; dimensions must agree.
    pub fn relabel(&self, families: Vec<BasisFamily>) -> Result<PureState> {
        if dims_of(&families) != self.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: total_dim(&families),
            });
        }
        Ok(PureState {
            families,
            amplitudes: self.amplitudes.clone(),
        })
    }

    /// Embeds every subsystem of a vacuum-free family into its vacuum-extended
    /// family (`H` → `H` within `{0, H, V}`).
    pub fn embed_vacuum(&self) -> Result<PureState> {
        let families = self
            .families
            .iter()
            .enumerate()
            .map(|(k, f)| {
                f.with_vacuum().ok_or(Error::FamilyMismatch {
                    subsystem: k,
                    expected: "a family with a vacuum extension",
                    found: f.name(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let old_dims = self.dims();
        let new_dims = dims_of(&families);
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); total_dim(&families)];
        for (i, a) in self.amplitudes.iter().enumerate() {
            let d: Vec<usize> = digits(i, &old_dims)
                .iter()
                .zip(&self.families)
                .map(|(&l, f)| if f.has_vacuum() { l } else { l + 1 })
                .collect();
            amplitudes[flat_index(&d, &new_dims)] = *a;
        }
        Ok(PureState { families, amplitudes })
    }

    pub fn to_vector(&self) -> DVector<Complex64> {
        DVector::from_column_slice(&self.amplitudes)
    }

    /// Plain-text form: a `# families` header, then one line per nonzero
    /// amplitude, `label-string real imag`, in flat-index order.
    pub fn to_text(&self) -> String {
        let mut out = families_header(&self.families);
        for (i, a) in self.amplitudes.iter().enumerate() {
            if a.norm() > 1e-15 {
                let _ = writeln!(out, "{} {:e} {:e}", label_string(&self.families, i), a.re, a.im);
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<PureState> {
        let mut lines = text.lines().enumerate();
        let (n, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "empty input".into(),
        })?;
        let families = parse_families_header(header, n + 1)?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); total_dim(&families)];
        for (n, line) in lines {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let label = parts.next().unwrap_or_default();
            let idx = parse_label(&families, label, n + 1)?;
            let re = parse_f64(parts.next(), n + 1)?;
            let im = parse_f64(parts.next(), n + 1)?;
            amplitudes[idx] = Complex64::new(re, im);
        }
        PureState::new(families, amplitudes)
    }
}

/// Kronecker product of two pure states.
pub fn tensor(a: &PureState, b: &PureState) -> PureState {
    a.tensor(b)
}

/// The four-photon cluster state (|HHHH⟩ + |VVHH⟩ + |HHVV⟩ − |VVVV⟩)/2.
pub fn cluster_state_4q() -> PureState {
    let families = vec![BasisFamily::Linear; 4];
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); 16];
    // H = 0, V = 1; subsystem 1 is the most significant bit.
    amplitudes[0b0000] = Complex64::new(0.5, 0.0);
    amplitudes[0b1100] = Complex64::new(0.5, 0.0);
    amplitudes[0b0011] = Complex64::new(0.5, 0.0);
    amplitudes[0b1111] = Complex64::new(-0.5, 0.0);
    PureState { families, amplitudes }
}

/// Quarter-wave-plate relabelling H↔σ−, V↔σ+ on every photonic subsystem.
pub fn waveplate_map(s: &PureState, direction: Direction) -> Result<PureState> {
    let families = waveplate_families(&s.families, direction)?;
    s.relabel(families)
}

/// A density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    families: Vec<BasisFamily>,
    matrix: DMatrix<Complex64>,
}

fn hermitize(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

fn hermitian_eigen(m: &DMatrix<Complex64>) -> (DVector<f64>, DMatrix<Complex64>) {
    let eig = hermitize(m).symmetric_eigen();
    (eig.eigenvalues, eig.eigenvectors)
}

/// Square root of a PSD Hermitian matrix with eigenvalues clamped at zero.
/// A with A A† = m, keeping only eigenvalues above round-off.
fn psd_factor(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let (vals, vecs) = hermitian_eigen(m);
    let cutoff = RANK_TOL * vals.iter().fold(1.0f64, |a, &v| a.max(v));
    let kept: Vec<usize> = (0..vals.len()).filter(|&j| vals[j] > cutoff).collect();
    DMatrix::from_fn(m.nrows(), kept.len(), |i, k| vecs[(i, kept[k])] * vals[kept[k]].sqrt())
}

impl DensityMatrix {
    /// Validates and wraps a matrix.
    pub fn new(families: Vec<BasisFamily>, matrix: DMatrix<Complex64>) -> Result<Self> {
        let dim = total_dim(&families);
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: matrix.nrows().max(matrix.ncols()),
            });
        }
        let asym = (&matrix - matrix.adjoint()).camax();
        if asym > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {asym:.3e})")));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let rho = DensityMatrix {
            families,
            matrix: hermitize(&matrix),
        };
        let min = rho.min_eigenvalue();
        if min < PSD_FLOOR {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(rho)
    }

    /// Renormalizes a (possibly sub-normalized) positive matrix produced internally.
    fn from_unnormalized(families: Vec<BasisFamily>, matrix: DMatrix<Complex64>) -> Result<(Self, f64)> {
        let tr = matrix.trace().re;
        if tr <= 0.0 || !tr.is_finite() {
            return Err(Error::ZeroProbability);
        }
        let matrix = hermitize(&matrix) / Complex64::new(tr, 0.0);
        Ok((DensityMatrix { families, matrix }, tr))
    }

    /// The rank-1 projector |ψ⟩⟨ψ|.
    pub fn from_pure(psi: &PureState) -> Self {
        let v = psi.to_vector();
        DensityMatrix {
            families: psi.families.clone(),
            matrix: &v * v.adjoint(),
        }
    }

    /// The maximally mixed state I/D.
    pub fn maximally_mixed(families: Vec<BasisFamily>) -> Self {
        let d = total_dim(&families);
        DensityMatrix {
            families,
            matrix: DMatrix::identity(d, d) / Complex64::new(d as f64, 0.0),
        }
    }

    pub fn families(&self) -> &[BasisFamily] {
        &self.families
    }

    pub fn dims(&self) -> Vec<usize> {
        dims_of(&self.families)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// Matrix element ⟨row|ρ|col⟩ addressed by label strings.
    pub fn element(&self, row: &str, col: &str) -> Result<Complex64> {
        let r = parse_label(&self.families, row, 0)?;
        let c = parse_label(&self.families, col, 0)?;
        Ok(self.matrix[(r, c)])
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = hermitian_eigen(&self.matrix).0.iter().copied().collect();
        v.sort_by(|a, b| a.total_cmp(b));
        v
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    /// ⟨ψ|ρ|ψ⟩.
    pub fn expectation_pure(&self, psi: &PureState) -> Result<f64> {
        if psi.families != self.families {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: psi.dim(),
            });
        }
        let v = psi.to_vector();
        Ok((v.adjoint() * &self.matrix * &v)[(0, 0)].re)
    }

    /// Tr(Aρ) for a Hermitian observable A.
    pub fn expectation(&self, observable: &DMatrix<Complex64>) -> Result<f64> {
        if observable.nrows() != self.dim() || observable.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: observable.nrows(),
            });
        }
        Ok((observable * &self.matrix).trace().re)
    }

    /// Applies a unitary: UρU†.
    pub fn conjugate_by(&self, unitary: &DMatrix<Complex64>) -> Result<Self> {
        if unitary.nrows() != self.dim() || unitary.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: unitary.nrows(),
            });
        }
        Ok(DensityMatrix {
            families: self.families.clone(),
            matrix: hermitize(&(unitary * &self.matrix * unitary.adjoint())),
        })
    }

    /// Relabels families (dimensions must agree).
    pub fn relabel(&self, families: Vec<BasisFamily>) -> Result<Self> {
        if dims_of(&families) != self.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: total_dim(&families),
            });
        }
        Ok(DensityMatrix {
            families,
            matrix: self.matrix.clone(),
        })
    }

    pub fn waveplate_map(&self, direction: Direction) -> Result<Self> {
        self.relabel(waveplate_families(&self.families, direction)?)
    }

    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        partial_trace(self, keep)
    }

    /// Projects every vacuum-carrying subsystem onto its excited levels and
    /// renormalizes; returns the conditional state and the success probability.
    pub fn postselect_excited(&self) -> Result<(Self, f64)> {
        let families = self
            .families
            .iter()
            .map(|f| f.without_vacuum().unwrap_or(*f))
            .collect::<Vec<_>>();
        let old_dims = self.dims();
        let new_dims = dims_of(&families);
        let kept: Vec<usize> = (0..total_dim(&families))
            .map(|i| {
                let d: Vec<usize> = digits(i, &new_dims)
                    .iter()
                    .zip(&self.families)
                    .map(|(&l, f)| if f.has_vacuum() { l + 1 } else { l })
                    .collect();
                flat_index(&d, &old_dims)
            })
            .collect();
        let n = kept.len();
        let block = DMatrix::from_fn(n, n, |r, c| self.matrix[(kept[r], kept[c])]);
        Self::from_unnormalized(families, block)
    }

    /// Text form: a `# families` header, then `row-label col-label real imag`
    /// for every nonzero entry in row-major order.
    pub fn to_text(&self) -> String {
        let mut out = families_header(&self.families);
        let n = self.dim();
        for r in 0..n {
            for c in 0..n {
                let a = self.matrix[(r, c)];
                if a.norm() > 1e-15 {
                    let _ = writeln!(
                        out,
                        "{} {} {:e} {:e}",
                        label_string(&self.families, r),
                        label_string(&self.families, c),
                        a.re,
                        a.im
                    );
                }
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (n, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "empty input".into(),
        })?;
        let families = parse_families_header(header, n + 1)?;
        let d = total_dim(&families);
        let mut m = DMatrix::zeros(d, d);
        for (n, line) in lines {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let r = parse_label(&families, parts.next().unwrap_or_default(), n + 1)?;
            let c = parse_label(&families, parts.next().unwrap_or_default(), n + 1)?;
            let re = parse_f64(parts.next(), n + 1)?;
            let im = parse_f64(parts.next(), n + 1)?;
            m[(r, c)] = Complex64::new(re, im);
        }
        DensityMatrix::new(families, m)
    }
}

/// |ψ⟩⟨ψ| for a normalized pure state.
pub fn density_from_pure(psi: &PureState) -> DensityMatrix {
    DensityMatrix::from_pure(psi)
}

/// A Kraus map from one subsystem family to another.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausChannel {
    operators: Vec<DMatrix<Complex64>>,
    input: BasisFamily,
    output: BasisFamily,
    trace_decreasing: bool,
}

impl KrausChannel {
    /// Validates shape and completeness. A channel with Σ K†K < I must be
    /// flagged `trace_decreasing`; it is then treated as a post-selection.
    pub fn new(
        operators: Vec<DMatrix<Complex64>>,
        input: BasisFamily,
        output: BasisFamily,
        trace_decreasing: bool,
    ) -> Result<Self> {
        if operators.is_empty() {
            return Err(Error::InvalidParameter("a channel needs at least one operator".into()));
        }
        for k in &operators {
            if k.nrows() != output.dim() || k.ncols() != input.dim() {
                return Err(Error::DimensionMismatch {
                    expected: output.dim() * input.dim(),
                    found: k.nrows() * k.ncols(),
                });
            }
        }
        let ch = KrausChannel {
            operators,
            input,
            output,
            trace_decreasing,
        };
        let gap = DMatrix::identity(input.dim(), input.dim()) - ch.completeness();
        let eigs = hermitian_eigen(&gap).0;
        let min = eigs.iter().copied().fold(f64::INFINITY, f64::min);
        let max_abs = gap.camax();
        if min < -CPTP_TOL {
            return Err(Error::TraceIncreasing { excess: -min });
        }
        if !trace_decreasing && max_abs > CPTP_TOL {
            return Err(Error::NotTracePreserving { deviation: max_abs });
        }
        Ok(ch)
    }

    pub fn identity(family: BasisFamily) -> Self {
        KrausChannel {
            operators: vec![DMatrix::identity(family.dim(), family.dim())],
            input: family,
            output: family,
            trace_decreasing: false,
        }
    }

    /// Amplitude damping towards the vacuum level of a vacuum-carrying family:
    /// every excited level survives with probability `retention`, otherwise it
    /// decays to level 0. The decayed levels remain distinguishable in the
    /// environment, so there is one loss operator per excited level.
    pub fn amplitude_damping(family: BasisFamily, retention: f64) -> Result<Self> {
        if !family.has_vacuum() {
            return Err(Error::FamilyMismatch {
                subsystem: 0,
                expected: "a family with a vacuum level",
                found: family.name(),
            });
        }
        if !(0.0..=1.0).contains(&retention) {
            return Err(Error::OutOfRange {
                name: "retention",
                value: retention,
            });
        }
        let d = family.dim();
        let keep = retention.sqrt();
        let lose = (1.0 - retention).sqrt();
        let mut ops = Vec::with_capacity(d);
        let mut k0 = DMatrix::zeros(d, d);
        k0[(0, 0)] = Complex64::new(1.0, 0.0);
        for l in 1..d {
            k0[(l, l)] = Complex64::new(keep, 0.0);
        }
        ops.push(k0);
        for l in 1..d {
            let mut k = DMatrix::zeros(d, d);
            k[(0, l)] = Complex64::new(lose, 0.0);
            ops.push(k);
        }
        KrausChannel::new(ops, family, family, false)
    }

    /// Complete loss: every excitation decays to the vacuum.
    pub fn full_loss(family: BasisFamily) -> Result<Self> {
        Self::amplitude_damping(family, 0.0)
    }

    /// Isometric embedding of a vacuum-free family into its vacuum extension.
    pub fn vacuum_embedding(family: BasisFamily) -> Result<Self> {
        let target = family
            .with_vacuum()
            .filter(|t| *t != family)
            .ok_or(Error::FamilyMismatch {
                subsystem: 0,
                expected: "a vacuum-free family",
                found: family.name(),
            })?;
        let k = DMatrix::from_fn(target.dim(), family.dim(), |r, c| {
            if r == c + 1 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        KrausChannel::new(vec![k], family, target, false)
    }

    pub fn operators(&self) -> &[DMatrix<Complex64>] {
        &self.operators
    }

    pub fn input(&self) -> BasisFamily {
        self.input
    }

    pub fn output(&self) -> BasisFamily {
        self.output
    }

    pub fn is_trace_decreasing(&self) -> bool {
        self.trace_decreasing
    }

    /// Σ K†K.
    pub fn completeness(&self) -> DMatrix<Complex64> {
        let d = self.input.dim();
        self.operators
            .iter()
            .fold(DMatrix::zeros(d, d), |acc, k| acc + k.adjoint() * k)
    }
}

/// Applies a channel to one subsystem. Returns the new state and the trace
/// before renormalization (1 for trace-preserving channels up to rounding).
pub fn apply_kraus(rho: &DensityMatrix, ch: &KrausChannel, subsystem: usize) -> Result<(DensityMatrix, f64)> {
    let n = rho.families.len();
    if subsystem >= n {
        return Err(Error::InvalidIndex {
            index: subsystem,
            count: n,
        });
    }
    if rho.families[subsystem] != ch.input {
        return Err(Error::FamilyMismatch {
            subsystem,
            expected: ch.input.name(),
            found: rho.families[subsystem].name(),
        });
    }
    let dims = rho.dims();
    let left: usize = dims[..subsystem].iter().product();
    let right: usize = dims[subsystem + 1..].iter().product();
    let id_l = DMatrix::<Complex64>::identity(left, left);
    let id_r = DMatrix::<Complex64>::identity(right, right);

    let out_dim = left * ch.output.dim() * right;
    let mut acc = DMatrix::<Complex64>::zeros(out_dim, out_dim);
    for k in &ch.operators {
        let full = id_l.kronecker(k).kronecker(&id_r);
        acc += &full * &rho.matrix * full.adjoint();
    }
    let mut families = rho.families.clone();
    families[subsystem] = ch.output;

    let trace = acc.trace().re;
    if ch.trace_decreasing {
        let (state, p) = DensityMatrix::from_unnormalized(families, acc)?;
        Ok((state, p))
    } else {
        Ok((
            DensityMatrix {
                families,
                matrix: hermitize(&acc),
            },
            trace,
        ))
    }
}

/// Uhlmann fidelity (Tr√(√ρ σ √ρ))², computed by Hermitian eigendecomposition
/// with eigenvalues clamped at zero.
pub fn fidelity(rho_in: &DensityMatrix, rho_out: &DensityMatrix) -> Result<f64> {
    if rho_in.families != rho_out.families {
        return Err(Error::DimensionMismatch {
            expected: rho_in.dim(),
            found: rho_out.dim(),
        });
    }
    // √F = ‖√ρ√σ‖₁ = ‖A†B‖₁ for any factorizations ρ = AA†, σ = BB†
    let a = psd_factor(&rho_in.matrix);
    let b = psd_factor(&rho_out.matrix);
    if a.ncols() == 0 || b.ncols() == 0 {
        return Ok(0.0);
    }
    let root_sum: f64 = (a.adjoint() * b).singular_values().iter().sum();
    Ok((root_sum * root_sum).clamp(0.0, 1.0))
}

/// Traces out every subsystem not listed in `keep`. The kept subsystems
/// retain their original relative order.
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let n = rho.families.len();
    if keep.is_empty() {
        return Err(Error::InvalidParameter("keep set is empty".into()));
    }
    let mut keep_sorted = keep.to_vec();
    keep_sorted.sort_unstable();
    keep_sorted.dedup();
    if keep_sorted.len() != keep.len() {
        return Err(Error::InvalidParameter("keep set has duplicates".into()));
    }
    if let Some(&bad) = keep_sorted.iter().find(|&&k| k >= n) {
        return Err(Error::InvalidIndex { index: bad, count: n });
    }
    let dims = rho.dims();
    let traced: Vec<usize> = (0..n).filter(|k| !keep_sorted.contains(k)).collect();
    let kept_dims: Vec<usize> = keep_sorted.iter().map(|&k| dims[k]).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&k| dims[k]).collect();
    let dk: usize = kept_dims.iter().product();
    let dt: usize = traced_dims.iter().product();

    let full_index = |kept: usize, tr: usize| -> usize {
        let kd = digits(kept, &kept_dims);
        let td = digits(tr, &traced_dims);
        let mut all = vec![0; n];
        for (i, &k) in keep_sorted.iter().enumerate() {
            all[k] = kd[i];
        }
        for (i, &k) in traced.iter().enumerate() {
            all[k] = td[i];
        }
        flat_index(&all, &dims)
    };

    let mut out = DMatrix::<Complex64>::zeros(dk, dk);
    for r in 0..dk {
        for c in 0..dk {
            let mut s = Complex64::new(0.0, 0.0);
            for t in 0..dt {
                s += rho.matrix[(full_index(r, t), full_index(c, t))];
            }
            out[(r, c)] = s;
        }
    }
    let families = keep_sorted.iter().map(|&k| rho.families[k]).collect();
    Ok(DensityMatrix {
        families,
        matrix: hermitize(&out),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use BasisFamily::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn tensor_of_h_and_v() {
        let h = PureState::from_labels(&[(Linear, "H")]).unwrap();
        let v = PureState::from_labels(&[(Linear, "V")]).unwrap();
        let hv = tensor(&h, &v);
        assert_eq!(hv.dims(), vec![2, 2]);
        assert_eq!(hv.amplitude_of("H,V").unwrap(), c(1.0));
        assert_abs_diff_eq!(hv.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn cluster_amplitudes() {
        let s = cluster_state_4q();
        assert_eq!(s.amplitude_of("H,H,H,H").unwrap(), c(0.5));
        assert_eq!(s.amplitude_of("V,V,H,H").unwrap(), c(0.5));
        assert_eq!(s.amplitude_of("H,H,V,V").unwrap(), c(0.5));
        assert_eq!(s.amplitude_of("V,V,V,V").unwrap(), c(-0.5));
        assert_eq!(s.amplitude_of("H,V,H,V").unwrap(), c(0.0));
        assert_abs_diff_eq!(s.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn waveplate_relabels() {
        let h = PureState::from_labels(&[(Linear, "H")]).unwrap();
        let v = PureState::from_labels(&[(Linear, "V")]).unwrap();
        let hm = waveplate_map(&h, Direction::In).unwrap();
        assert_eq!(hm.families(), &[Circular]);
        assert_eq!(hm.amplitude_of("s-").unwrap(), c(1.0));
        assert_eq!(
            waveplate_map(&v, Direction::In).unwrap().amplitude_of("s+").unwrap(),
            c(1.0)
        );

        let s = cluster_state_4q();
        let round = waveplate_map(&waveplate_map(&s, Direction::In).unwrap(), Direction::Out).unwrap();
        assert_eq!(round, s);
    }

    #[test]
    fn waveplate_rejects_wrong_family() {
        let h = PureState::from_labels(&[(Linear, "H")]).unwrap();
        assert!(matches!(
            waveplate_map(&h, Direction::Out),
            Err(Error::FamilyMismatch { .. })
        ));
        let sm = waveplate_map(&h, Direction::In).unwrap();
        assert!(waveplate_map(&sm, Direction::In).is_err());
    }

    #[test]
    fn density_of_h_and_cluster() {
        let h = PureState::from_labels(&[(Linear, "H")]).unwrap();
        let rho = density_from_pure(&h);
        assert_eq!(rho.matrix()[(0, 0)], c(1.0));
        assert_eq!(rho.matrix()[(1, 1)], c(0.0));

        let rho = density_from_pure(&cluster_state_4q());
        assert_eq!(rho.dim(), 16);
        assert_abs_diff_eq!(rho.trace(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rho.purity(), 1.0, epsilon = 1e-12);
        // outer product of +1/2 and -1/2
        let off = rho.element("H,H,H,H", "V,V,V,V").unwrap();
        assert_abs_diff_eq!(off.re, -0.25, epsilon = 1e-15);
    }

    #[test]
    fn fidelity_edge_cases() {
        let h = density_from_pure(&PureState::from_labels(&[(Linear, "H")]).unwrap());
        let v = density_from_pure(&PureState::from_labels(&[(Linear, "V")]).unwrap());
        assert_abs_diff_eq!(fidelity(&h, &h).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fidelity(&h, &v).unwrap(), 0.0, epsilon = 1e-12);

        let cl = density_from_pure(&cluster_state_4q());
        let mixed = DensityMatrix::maximally_mixed(vec![Linear; 4]);
        assert_abs_diff_eq!(fidelity(&cl, &mixed).unwrap(), 1.0 / 16.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fidelity(&mixed, &cl).unwrap(), 1.0 / 16.0, epsilon = 1e-12);
        assert!(fidelity(&h, &cl).is_err());
    }

    #[test]
    fn partial_trace_of_product() {
        let hv = PureState::from_labels(&[(Linear, "H"), (Linear, "V")]).unwrap();
        let rho = density_from_pure(&hv);
        let red = partial_trace(&rho, &[0]).unwrap();
        assert_eq!(red.families(), &[Linear]);
        assert_abs_diff_eq!(red.matrix()[(0, 0)].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(red.matrix()[(1, 1)].re, 0.0, epsilon = 1e-15);
        assert!(matches!(partial_trace(&rho, &[2]), Err(Error::InvalidIndex { .. })));
        assert!(partial_trace(&rho, &[]).is_err());
    }

    #[test]
    fn partial_trace_of_cluster_is_maximally_mixed() {
        // Brute force: sum |a_{i..}|^2 over the other three indices directly
        // from the amplitude table.
        let psi = cluster_state_4q();
        let rho = density_from_pure(&psi);
        for q in 0..4 {
            let red = partial_trace(&rho, &[q]).unwrap();
            let mut brute = [[Complex64::new(0.0, 0.0); 2]; 2];
            for a in 0..16usize {
                for b in 0..16usize {
                    let (da, db) = (digits(a, &[2; 4]), digits(b, &[2; 4]));
                    let others_equal = (0..4).filter(|&k| k != q).all(|k| da[k] == db[k]);
                    if others_equal {
                        brute[da[q]][db[q]] += psi.amplitudes()[a] * psi.amplitudes()[b].conj();
                    }
                }
            }
            for r in 0..2 {
                for s in 0..2 {
                    assert_abs_diff_eq!(red.matrix()[(r, s)].re, brute[r][s].re, epsilon = 1e-15);
                    assert_abs_diff_eq!(red.matrix()[(r, s)].im, brute[r][s].im, epsilon = 1e-15);
                }
            }
            assert_abs_diff_eq!(brute[0][0].re, 0.5, epsilon = 1e-15);
            assert_abs_diff_eq!(brute[0][1].norm(), 0.0, epsilon = 1e-15);
            assert_abs_diff_eq!(red.trace(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn identity_channel_leaves_state() {
        let rho = density_from_pure(&cluster_state_4q());
        let (out, p) = apply_kraus(&rho, &KrausChannel::identity(Linear), 2).unwrap();
        assert_abs_diff_eq!((out.matrix() - rho.matrix()).camax(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn full_loss_leaves_vacuum() {
        let psi = PureState::from_labels(&[(LinearMode, "H"), (LinearMode, "V")]).unwrap();
        let rho = density_from_pure(&psi);
        let (out, p) = apply_kraus(&rho, &KrausChannel::full_loss(LinearMode).unwrap(), 0).unwrap();
        assert_abs_diff_eq!(p, 1.0, epsilon = 1e-12);
        let red = partial_trace(&out, &[0]).unwrap();
        assert_abs_diff_eq!(red.element("0", "0").unwrap().re, 1.0, epsilon = 1e-12);
        let other = partial_trace(&out, &[1]).unwrap();
        assert_abs_diff_eq!(other.element("V", "V").unwrap().re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn kraus_validation() {
        let k = DMatrix::from_element(2, 2, Complex64::new(1.0, 0.0));
        assert!(matches!(
            KrausChannel::new(vec![k.clone()], Linear, Linear, false),
            Err(Error::TraceIncreasing { .. })
        ));
        let half = DMatrix::<Complex64>::identity(2, 2) * Complex64::new(0.5, 0.0);
        assert!(matches!(
            KrausChannel::new(vec![half.clone()], Linear, Linear, false),
            Err(Error::NotTracePreserving { .. })
        ));
        let ch = KrausChannel::new(vec![half], Linear, Linear, true).unwrap();
        let rho = density_from_pure(&PureState::from_labels(&[(Linear, "H")]).unwrap());
        let (out, p) = apply_kraus(&rho, &ch, 0).unwrap();
        assert_abs_diff_eq!(p, 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(out.trace(), 1.0, epsilon = 1e-15);
        // wrong subsystem family
        assert!(apply_kraus(&rho, &KrausChannel::identity(Spin), 0).is_err());
        assert!(apply_kraus(&rho, &ch, 1).is_err());
    }

    #[test]
    fn embedding_and_postselection() {
        let psi = cluster_state_4q().embed_vacuum().unwrap();
        assert_eq!(psi.families(), &[LinearMode; 4]);
        assert_eq!(psi.amplitude_of("V,V,V,V").unwrap(), c(-0.5));
        let rho = density_from_pure(&psi);
        let (post, p) = rho.postselect_excited().unwrap();
        assert_abs_diff_eq!(p, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            fidelity(&post, &density_from_pure(&cluster_state_4q())).unwrap(),
            1.0,
            epsilon = 1e-12
        );

        let ch = KrausChannel::vacuum_embedding(Spin).unwrap();
        assert_eq!(ch.output(), Ensemble);
        assert!(KrausChannel::vacuum_embedding(Ensemble).is_err());
    }

    #[test]
    fn text_round_trip() {
        let s = cluster_state_4q();
        let text = s.to_text();
        assert!(text.starts_with("# families linear,linear,linear,linear\n"));
        assert!(text.contains("V,V,V,V -5e-1 0e0"));
        assert_eq!(text.lines().count(), 5);
        assert_eq!(PureState::from_text(&text).unwrap(), s);

        let rho = density_from_pure(&s);
        let back = DensityMatrix::from_text(&rho.to_text()).unwrap();
        assert_abs_diff_eq!((back.matrix() - rho.matrix()).camax(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn text_parse_errors() {
        assert!(matches!(PureState::from_text(""), Err(Error::Parse { .. })));
        assert!(matches!(
            PureState::from_text("# families linear\nX 1 0\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            PureState::from_text("# families linear\nH one 0\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(PureState::from_text("# families photon\n").is_err());
    }

    #[test]
    fn density_validation() {
        let bad = DMatrix::from_row_slice(2, 2, &[c(0.5), c(0.1), c(0.0), c(0.5)]);
        assert!(DensityMatrix::new(vec![Linear], bad).is_err());
        let neg = DMatrix::from_row_slice(2, 2, &[c(1.5), c(0.0), c(0.0), c(-0.5)]);
        assert!(DensityMatrix::new(vec![Linear], neg).is_err());
        let ok = DMatrix::from_row_slice(2, 2, &[c(0.5), c(0.0), c(0.0), c(0.5)]);
        assert!(DensityMatrix::new(vec![Linear], ok).is_ok());
    }
}

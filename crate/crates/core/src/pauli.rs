//! Pauli strings and real-weighted Pauli sums.
//!
//! Qubit `q` of an `n`-qubit register maps to bit `n - 1 - q` of a basis
//! index, so qubit 0 is the most significant bit. The same convention is used
//! by [`crate::qsim`] and by the text form of a string (`"XZII"` puts `X` on
//! qubit 0).

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{invalid, Error, Result};

/// Coefficients with magnitude below this are dropped when terms are merged.
pub const DROP_TOLERANCE: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'I' => Some(Self::I),
            'X' => Some(Self::X),
            'Y' => Some(Self::Y),
            'Z' => Some(Self::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Self::I => 'I',
            Self::X => 'X',
            Self::Y => 'Y',
            Self::Z => 'Z',
        }
    }

    /// Single-qubit Paulis commute iff one is the identity or they are equal.
    pub fn commutes_with(self, other: Self) -> bool {
        self == Self::I || other == Self::I || self == other
    }
}

/// Bit of a basis index that holds qubit `q`.
#[inline]
pub fn qubit_bit(n_qubits: usize, q: usize) -> usize {
    1 << (n_qubits - 1 - q)
}

/// Tensor product of single-qubit Paulis, one per qubit.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    ops: Vec<Pauli>,
}

impl PauliString {
    pub fn new(ops: Vec<Pauli>) -> Self {
        Self { ops }
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self { ops: vec![Pauli::I; n_qubits] }
    }

    /// A string acting as `op` on each listed qubit and identity elsewhere.
    pub fn from_sparse(n_qubits: usize, ops: &[(usize, Pauli)]) -> Result<Self> {
        let mut s = Self::identity(n_qubits);
        for &(q, p) in ops {
            if q >= n_qubits {
                return invalid(format!("qubit {q} out of range for {n_qubits} qubits"));
            }
            s.ops[q] = p;
        }
        Ok(s)
    }

    pub fn n_qubits(&self) -> usize {
        self.ops.len()
    }

    pub fn ops(&self) -> &[Pauli] {
        &self.ops
    }

    pub fn get(&self, q: usize) -> Pauli {
        self.ops[q]
    }

    pub fn is_identity(&self) -> bool {
        self.ops.iter().all(|&p| p == Pauli::I)
    }

    pub fn weight(&self) -> usize {
        self.ops.iter().filter(|&&p| p != Pauli::I).count()
    }

    pub fn is_diagonal(&self) -> bool {
        self.ops.iter().all(|&p| matches!(p, Pauli::I | Pauli::Z))
    }

    pub fn qubit_wise_commutes(&self, other: &Self) -> bool {
        self.ops.len() == other.ops.len()
            && self.ops.iter().zip(&other.ops).all(|(a, b)| a.commutes_with(*b))
    }

    /// Index mask of qubits carrying X or Y (bits flipped by the string).
    pub fn flip_mask(&self) -> usize {
        let n = self.n_qubits();
        self.ops
            .iter()
            .enumerate()
            .filter(|(_, p)| matches!(p, Pauli::X | Pauli::Y))
            .fold(0, |m, (q, _)| m | qubit_bit(n, q))
    }

    /// Index mask of qubits carrying Y or Z (bits contributing a sign).
    pub fn phase_mask(&self) -> usize {
        let n = self.n_qubits();
        self.ops
            .iter()
            .enumerate()
            .filter(|(_, p)| matches!(p, Pauli::Y | Pauli::Z))
            .fold(0, |m, (q, _)| m | qubit_bit(n, q))
    }

    /// Index mask of every non-identity qubit.
    pub fn support_mask(&self) -> usize {
        self.flip_mask() | self.phase_mask()
    }

    fn y_count(&self) -> usize {
        self.ops.iter().filter(|&&p| p == Pauli::Y).count()
    }

    /// `P|b> = phase * |b ^ flip_mask>`; returns the target index and phase.
    #[inline]
    pub fn apply_to_basis(&self, b: usize) -> (usize, C64) {
        let flip = self.flip_mask();
        let sign = if (b & self.phase_mask()).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
        let phase = match self.y_count() % 4 {
            0 => C64::new(sign, 0.0),
            1 => C64::new(0.0, sign),
            2 => C64::new(-sign, 0.0),
            _ => C64::new(0.0, -sign),
        };
        (b ^ flip, phase)
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let dim = 1usize << self.n_qubits();
        let mut m = DMatrix::zeros(dim, dim);
        for b in 0..dim {
            let (to, phase) = self.apply_to_basis(b);
            m[(to, b)] = phase;
        }
        m
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let ops = s
            .chars()
            .map(|c| Pauli::from_char(c).ok_or_else(|| Error::InvalidInput(format!("bad Pauli letter {c:?} in {s:?}"))))
            .collect::<Result<Vec<_>>>()?;
        if ops.is_empty() {
            return invalid("empty Pauli string");
        }
        Ok(Self { ops })
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.ops {
            write!(f, "{}", p.as_char())?;
        }
        Ok(())
    }
}

/// Real-weighted sum of Pauli strings on a fixed register.
///
/// Real coefficients make every sum Hermitian. Duplicate strings are merged on
/// insertion and terms whose merged coefficient falls below
/// [`DROP_TOLERANCE`] are removed. Term order is insertion order.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliSum {
    n_qubits: usize,
    terms: Vec<(f64, PauliString)>,
}

impl PauliSum {
    pub fn new(n_qubits: usize) -> Self {
        Self { n_qubits, terms: Vec::new() }
    }

    pub fn from_terms<I>(n_qubits: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, PauliString)>,
    {
        let mut sum = Self::new(n_qubits);
        for (c, p) in terms {
            sum.add_term(c, p)?;
        }
        Ok(sum)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[(f64, PauliString)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, coeff: f64, string: PauliString) -> Result<()> {
        if string.n_qubits() != self.n_qubits {
            return invalid(format!(
                "Pauli string {string} has {} qubits, sum has {}",
                string.n_qubits(),
                self.n_qubits
            ));
        }
        if !coeff.is_finite() {
            return invalid(format!("non-finite coefficient for {string}"));
        }
        if let Some(pos) = self.terms.iter().position(|(_, s)| *s == string) {
            self.terms[pos].0 += coeff;
            if self.terms[pos].0.abs() < DROP_TOLERANCE {
                self.terms.remove(pos);
            }
        } else if coeff.abs() >= DROP_TOLERANCE {
            self.terms.push((coeff, string));
        }
        Ok(())
    }

    /// Coefficient of the all-identity string (zero if absent).
    pub fn identity_coefficient(&self) -> f64 {
        self.terms.iter().find(|(_, s)| s.is_identity()).map_or(0.0, |(c, _)| *c)
    }

    pub fn non_identity_terms(&self) -> impl Iterator<Item = &(f64, PauliString)> {
        self.terms.iter().filter(|(_, s)| !s.is_identity())
    }

    pub fn coefficient_of(&self, string: &PauliString) -> f64 {
        self.terms.iter().find(|(_, s)| s == string).map_or(0.0, |(c, _)| *c)
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let dim = 1usize << self.n_qubits;
        let mut m = DMatrix::zeros(dim, dim);
        for (c, p) in &self.terms {
            for b in 0..dim {
                let (to, phase) = p.apply_to_basis(b);
                m[(to, b)] += phase * *c;
            }
        }
        m
    }

    /// One `"coefficient string"` line per term, e.g. `-0.5 XXII`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (c, p) in &self.terms {
            out.push_str(&format!("{c} {p}\n"));
        }
        out
    }

    /// Parses the output of [`PauliSum::to_text`]. Blank lines and lines
    /// starting with `#` are ignored.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut parsed = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(c), Some(p), None) = (parts.next(), parts.next(), parts.next()) else {
                return invalid(format!("line {}: expected `coefficient pauli_string`", lineno + 1));
            };
            let c: f64 = c
                .parse()
                .map_err(|_| Error::InvalidInput(format!("line {}: bad coefficient {c:?}", lineno + 1)))?;
            parsed.push((c, p.parse::<PauliString>()?));
        }
        let Some(n) = parsed.first().map(|(_, p)| p.n_qubits()) else {
            return invalid("no terms");
        };
        Self::from_terms(n, parsed)
    }
}

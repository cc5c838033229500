//! Homogeneous linear systems over `F_p` and their kernel parameterization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest modulus accepted by the parser.
pub const MAX_PRIME: u64 = 31;

/// Document form of a system: a modulus and a row-major integer matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemDocument {
    pub p: u64,
    pub matrix: Vec<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

/// A full-rank `m x t` system `M x = 0` over `F_p` together with a kernel
/// parameterization `x_i = psi_i(y)`, `y in F_p^D`, `D = t - m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearSystem {
    p: u32,
    matrix: Vec<Vec<u32>>,
    forms: Vec<Vec<u32>>,
    name: Option<String>,
}

/// Blocks of a system whose equations touch pairwise disjoint variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    pub blocks: Vec<LinearSystem>,
    /// `columns[b][k]` is the original column of variable `k` in block `b`.
    pub columns: Vec<Vec<usize>>,
    /// Columns that appear in no equation.
    pub free_columns: Vec<usize>,
}

impl Factorization {
    /// Original column order obtained by concatenating the blocks and then
    /// the free columns.
    pub fn permutation(&self) -> Vec<usize> {
        self.columns
            .iter()
            .flatten()
            .chain(self.free_columns.iter())
            .copied()
            .collect()
    }
}

pub(crate) fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

pub(crate) fn inv_mod(a: u32, p: u32) -> u32 {
    debug_assert!(a % p != 0);
    let mut result = 1u64;
    let mut base = a as u64 % p as u64;
    let mut e = p - 2;
    while e > 0 {
        if e & 1 == 1 {
            result = result * base % p as u64;
        }
        base = base * base % p as u64;
        e >>= 1;
    }
    result as u32
}

fn check_modulus(p: u64) -> Result<u32> {
    if p == 2 || !is_prime(p) {
        return Err(Error::NotOddPrime(p));
    }
    if p > MAX_PRIME {
        return Err(Error::PrimeOutOfRange(p));
    }
    Ok(p as u32)
}

/// Reduced row-echelon form with the leftmost pivot taken from the smallest
/// available row index. Returns the reduced matrix and pivot columns.
fn rref(p: u32, rows: &[Vec<u32>]) -> (Vec<Vec<u32>>, Vec<usize>) {
    let mut a = rows.to_vec();
    let m = a.len();
    let t = a.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..t {
        if r == m {
            break;
        }
        let Some(pr) = (r..m).find(|&i| a[i][c] != 0) else {
            continue;
        };
        a.swap(r, pr);
        let inv = inv_mod(a[r][c], p);
        for v in a[r].iter_mut() {
            *v = (*v * inv) % p;
        }
        for i in 0..m {
            if i != r && a[i][c] != 0 {
                let factor = a[i][c];
                for j in 0..t {
                    a[i][j] = (a[i][j] + (p - factor) * a[r][j]) % p;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    (a, pivots)
}

impl LinearSystem {
    /// Builds a system from integer rows, reducing entries mod `p`.
    pub fn new(p: u64, matrix: &[Vec<i64>]) -> Result<Self> {
        let p = check_modulus(p)?;
        if matrix.is_empty() {
            return Err(Error::MalformedDocument("matrix has no rows".into()));
        }
        let t = matrix[0].len();
        if t == 0 || matrix.iter().any(|r| r.len() != t) {
            return Err(Error::MalformedDocument(
                "matrix rows must be non-empty and of equal length".into(),
            ));
        }
        let reduced: Vec<Vec<u32>> = matrix
            .iter()
            .map(|row| row.iter().map(|&v| v.rem_euclid(p as i64) as u32).collect())
            .collect();
        let m = reduced.len();
        if t <= m {
            return Err(Error::NoFreeVariables { vars: t, rows: m });
        }
        Self::from_reduced(p, reduced, false)
    }

    /// Builds from canonical entries. `allow_no_free` admits `t == m`, which
    /// only arises for blocks produced by [`LinearSystem::factor_disjoint`].
    fn from_reduced(p: u32, matrix: Vec<Vec<u32>>, allow_no_free: bool) -> Result<Self> {
        let m = matrix.len();
        let t = matrix[0].len();
        if t < m || (t == m && !allow_no_free) {
            return Err(Error::NoFreeVariables { vars: t, rows: m });
        }
        let (reduced, pivots) = rref(p, &matrix);
        if pivots.len() < m {
            return Err(Error::RankDeficient {
                rank: pivots.len(),
                rows: m,
            });
        }
        let free: Vec<usize> = (0..t).filter(|c| !pivots.contains(c)).collect();
        let d = free.len();
        let mut forms = vec![vec![0u32; d]; t];
        for (k, &c) in free.iter().enumerate() {
            forms[c][k] = 1;
        }
        for (r, &c) in pivots.iter().enumerate() {
            for (k, &j) in free.iter().enumerate() {
                forms[c][k] = (p - reduced[r][j]) % p;
            }
        }
        Ok(Self {
            p,
            matrix,
            forms,
            name: None,
        })
    }

    pub fn from_document(doc: &SystemDocument) -> Result<Self> {
        let mut s = Self::new(doc.p, &doc.matrix)?;
        s.name = doc.name.clone();
        Ok(s)
    }

    /// Parses a JSON system document.
    pub fn parse(text: &str) -> Result<Self> {
        let doc: SystemDocument = serde_json::from_str(text)?;
        Self::from_document(&doc)
    }

    /// One of the shipped presets: `phi`, `a4`, `a5`, `ap3`, `schur`.
    pub fn preset(name: &str, p: u64) -> Result<Self> {
        let rows: Vec<Vec<i64>> = match name {
            "phi" => vec![
                vec![1, -1, 1, -1, 0, 0, 0, 0, 0],
                vec![0, 0, 0, 0, 1, -1, 1, -1, 1],
            ],
            "a4" => vec![vec![1, -1, 1, -1]],
            "a5" => vec![vec![1, -1, 1, -1, 1]],
            "ap3" => vec![vec![1, -2, 1]],
            "schur" => vec![vec![1, 1, -1]],
            _ => return Err(Error::UnknownPreset(name.to_string())),
        };
        Ok(Self::new(p, &rows)?.with_name(name))
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    /// Stable identifier: the name if present, else the matrix.
    pub fn id(&self) -> String {
        match &self.name {
            Some(n) => format!("{n}@p{}", self.p),
            None => format!("p{}:{:?}", self.p, self.matrix),
        }
    }

    pub fn to_document(&self) -> SystemDocument {
        SystemDocument {
            p: self.p as u64,
            matrix: self
                .matrix
                .iter()
                .map(|r| r.iter().map(|&v| v as i64).collect())
                .collect(),
            name: self.name.clone(),
        }
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    /// Number of equations.
    pub fn rows(&self) -> usize {
        self.matrix.len()
    }

    /// Number of variables.
    pub fn vars(&self) -> usize {
        self.forms.len()
    }

    /// Dimension `D = t - m` of the solution space.
    pub fn dim(&self) -> usize {
        self.vars() - self.rows()
    }

    pub fn matrix(&self) -> &[Vec<u32>] {
        &self.matrix
    }

    /// `kernel_forms()[i]` holds the coefficients of `psi_i` in `F_p^D`.
    pub fn kernel_forms(&self) -> &[Vec<u32>] {
        &self.forms
    }

    /// Evaluates `(psi_1(y), ..., psi_t(y))` for scalar parameters.
    pub fn kernel_point(&self, y: &[u32]) -> Vec<u32> {
        let p = self.p as u64;
        self.forms
            .iter()
            .map(|form| {
                (form
                    .iter()
                    .zip(y)
                    .map(|(&a, &b)| a as u64 * b as u64)
                    .sum::<u64>()
                    % p) as u32
            })
            .collect()
    }

    /// True when `M x = 0` over `F_p`.
    pub fn is_solution(&self, x: &[u32]) -> bool {
        let p = self.p as u64;
        self.matrix.iter().all(|row| {
            row.iter()
                .zip(x)
                .map(|(&a, &b)| a as u64 * b as u64)
                .sum::<u64>()
                % p
                == 0
        })
    }

    /// Every equation is solved by constant tuples.
    pub fn is_translation_invariant(&self) -> bool {
        let p = self.p as u64;
        self.matrix
            .iter()
            .all(|row| row.iter().map(|&v| v as u64).sum::<u64>() % p == 0)
    }

    /// Appends `l` variables that occur in no equation.
    pub fn add_free_variables(&self, l: usize) -> Self {
        if l == 0 {
            return self.clone();
        }
        let matrix = self
            .matrix
            .iter()
            .map(|row| {
                let mut r = row.clone();
                r.resize(row.len() + l, 0);
                r
            })
            .collect();
        let mut out = Self::from_reduced(self.p, matrix, false)
            .expect("padding a full-rank system keeps it full rank");
        out.name = self.name.as_ref().map(|n| format!("{n}^({l})"));
        out
    }

    /// Splits the system along connected components of the row/variable
    /// incidence graph.
    pub fn factor_disjoint(&self) -> Factorization {
        let m = self.rows();
        let t = self.vars();
        // union-find over rows
        let mut parent: Vec<usize> = (0..m).collect();
        fn find(parent: &mut [usize], i: usize) -> usize {
            let mut r = i;
            while parent[r] != r {
                r = parent[r];
            }
            let mut j = i;
            while parent[j] != r {
                let next = parent[j];
                parent[j] = r;
                j = next;
            }
            r
        }
        for c in 0..t {
            let rows: Vec<usize> = (0..m).filter(|&r| self.matrix[r][c] != 0).collect();
            for w in rows.windows(2) {
                let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
        let mut roots: Vec<usize> = Vec::new();
        let mut block_rows: Vec<Vec<usize>> = Vec::new();
        for r in 0..m {
            let root = find(&mut parent, r);
            match roots.iter().position(|&x| x == root) {
                Some(i) => block_rows[i].push(r),
                None => {
                    roots.push(root);
                    block_rows.push(vec![r]);
                }
            }
        }
        let mut blocks = Vec::with_capacity(block_rows.len());
        let mut columns = Vec::with_capacity(block_rows.len());
        for rows in &block_rows {
            let cols: Vec<usize> = (0..t)
                .filter(|&c| rows.iter().any(|&r| self.matrix[r][c] != 0))
                .collect();
            let sub: Vec<Vec<u32>> = rows
                .iter()
                .map(|&r| cols.iter().map(|&c| self.matrix[r][c]).collect())
                .collect();
            let block = Self::from_reduced(self.p, sub, true)
                .expect("rows of a full-rank system stay independent");
            blocks.push(block);
            columns.push(cols);
        }
        let free_columns = (0..t)
            .filter(|&c| (0..m).all(|r| self.matrix[r][c] == 0))
            .collect();
        Factorization {
            blocks,
            columns,
            free_columns,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_row_is_rank_deficient() {
        let err = LinearSystem::new(3, &[vec![1, 2, 1, 2], vec![0, 0, 0, 0]]).unwrap_err();
        assert_eq!(err, Error::RankDeficient { rank: 1, rows: 2 });
    }

    #[test]
    fn dependent_rows_are_rank_deficient() {
        let err = LinearSystem::new(5, &[vec![1, 2, 3], vec![2, 4, 6]]).unwrap_err();
        assert!(matches!(err, Error::RankDeficient { rank: 1, .. }));
    }

    #[test]
    fn modulus_checks() {
        assert_eq!(
            LinearSystem::new(2, &[vec![1, 1, 1]]).unwrap_err(),
            Error::NotOddPrime(2)
        );
        assert_eq!(
            LinearSystem::new(9, &[vec![1, 1, 1]]).unwrap_err(),
            Error::NotOddPrime(9)
        );
        assert_eq!(
            LinearSystem::new(37, &[vec![1, 1, 1]]).unwrap_err(),
            Error::PrimeOutOfRange(37)
        );
    }

    #[test]
    fn square_system_has_no_free_variables() {
        let err = LinearSystem::new(3, &[vec![1, 0], vec![0, 1]]).unwrap_err();
        assert_eq!(err, Error::NoFreeVariables { vars: 2, rows: 2 });
    }

    #[test]
    fn phi_shape() {
        let s = LinearSystem::preset("phi", 3).unwrap();
        assert_eq!((s.vars(), s.rows(), s.dim()), (9, 2, 7));
    }

    #[test]
    fn ap3_shape_and_reduction() {
        let s = LinearSystem::new(3, &[vec![1, 1, 2]]).unwrap();
        assert_eq!((s.vars(), s.rows(), s.dim()), (3, 1, 2));
        let preset = LinearSystem::preset("ap3", 3).unwrap();
        assert_eq!(preset.matrix(), &[vec![1, 1, 1]]);
        let s5 = LinearSystem::preset("ap3", 5).unwrap();
        assert_eq!(s5.matrix(), &[vec![1, 3, 1]]);
    }

    #[test]
    fn translation_invariance() {
        assert!(LinearSystem::preset("ap3", 5).unwrap().is_translation_invariant());
        assert!(!LinearSystem::preset("phi", 3).unwrap().is_translation_invariant());
        assert!(!LinearSystem::preset("schur", 3).unwrap().is_translation_invariant());
        assert!(LinearSystem::preset("a4", 7).unwrap().is_translation_invariant());
    }

    #[test]
    fn free_variables_pad_columns() {
        let phi = LinearSystem::preset("phi", 3).unwrap();
        assert_eq!(phi.add_free_variables(0), phi);
        let padded = phi.add_free_variables(3);
        assert_eq!((padded.vars(), padded.dim()), (12, 10));
        for row in padded.matrix() {
            assert_eq!(&row[9..], &[0, 0, 0]);
        }
    }

    #[test]
    fn ap3_with_one_free_variable_matches_progressions() {
        let p = 5u32;
        let s = LinearSystem::preset("ap3", p as u64).unwrap().add_free_variables(1);
        let mut ours: Vec<Vec<u32>> = Vec::new();
        for a in 0..p {
            for b in 0..p {
                for c in 0..p {
                    ours.push(s.kernel_point(&[a, b, c]));
                }
            }
        }
        let mut expected: Vec<Vec<u32>> = Vec::new();
        for x in 0..p {
            for d in 0..p {
                for y in 0..p {
                    expected.push(vec![x, (x + d) % p, (x + 2 * d) % p, y]);
                }
            }
        }
        ours.sort();
        expected.sort();
        assert_eq!(ours, expected);
    }

    #[test]
    fn phi_factors_into_a4_and_a5() {
        let phi = LinearSystem::preset("phi", 3).unwrap();
        let f = phi.factor_disjoint();
        assert_eq!(f.blocks.len(), 2);
        assert_eq!(f.columns, vec![vec![0, 1, 2, 3], vec![4, 5, 6, 7, 8]]);
        assert_eq!(f.blocks[0].matrix(), LinearSystem::preset("a4", 3).unwrap().matrix());
        assert_eq!(f.blocks[1].matrix(), LinearSystem::preset("a5", 3).unwrap().matrix());
        assert_eq!(f.permutation(), (0..9).collect::<Vec<_>>());
    }

    #[test]
    fn single_equation_is_one_block() {
        let s = LinearSystem::preset("schur", 5).unwrap();
        let f = s.factor_disjoint();
        assert_eq!(f.blocks.len(), 1);
        assert_eq!(f.blocks[0].matrix(), s.matrix());
    }

    #[test]
    fn shared_variable_joins_rows() {
        let s = LinearSystem::new(3, &[vec![1, 1, 0], vec![0, 1, 1]]).unwrap();
        let f = s.factor_disjoint();
        assert_eq!(f.blocks.len(), 1);
        assert_eq!(f.blocks[0].rows(), 2);
    }

    #[test]
    fn free_columns_are_reported() {
        let s = LinearSystem::preset("a4", 3).unwrap().add_free_variables(2);
        let f = s.factor_disjoint();
        assert_eq!(f.free_columns, vec![4, 5]);
        assert_eq!(f.permutation(), vec![0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn document_round_trip() {
        let text = r#"{"p": 3, "matrix": [[1, -1, 1, -1, 0, 0, 0, 0, 0], [0, 0, 0, 0, 1, -1, 1, -1, 1]]}"#;
        let s = LinearSystem::parse(text).unwrap();
        assert_eq!(s, LinearSystem::preset("phi", 3).unwrap().to_owned_without_name());
        assert!(matches!(
            LinearSystem::parse(r#"{"p": 3}"#),
            Err(Error::MalformedDocument(_))
        ));
        assert!(matches!(
            LinearSystem::parse(r#"{"p": 3, "matrix": [[1, 2], [1]]}"#),
            Err(Error::MalformedDocument(_))
        ));
    }

    impl LinearSystem {
        fn to_owned_without_name(&self) -> Self {
            let mut s = self.clone();
            s.name = None;
            s
        }
    }
}

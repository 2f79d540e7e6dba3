//! Game data: leader and follower quadratic programs, validation and the
//! JSON game format.
//!
//! Leader `ν` solves
//!
//! ```text
//! min  ½ x_νᵀ Q_ν x_ν + c_νᵀ x_ν + aᵀ y(x)   s.t.  A_νᵀ x_ν + b_ν ≤ 0
//! ```
//!
//! and the single follower solves `min ½ yᵀ Q_y y − (Bᵀx)ᵀ y  s.t.  y ≥ Lᵀx`
//! with a diagonal `Q_y`. Leaders are ordered; the joint strategy `x` is the
//! concatenation `x₁‖…‖x_N` and every `n×m` follower matrix is sliced by the
//! same cumulative offsets.

use std::fmt;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::GameError;

const SYMMETRY_RTOL: f64 = 1e-12;
const PIVOT_RTOL: f64 = 1e-12;

/// One leader's quadratic program.
#[derive(Debug, Clone, PartialEq)]
pub struct LeaderSpec {
    /// Symmetric positive definite Hessian, `n_ν × n_ν`.
    pub q: DMatrix<f64>,
    /// Linear cost, length `n_ν`.
    pub c: DVector<f64>,
    /// Constraint matrix, `n_ν × m_ν`; the strategy set is `Aᵀx_ν + b ≤ 0`.
    pub a: DMatrix<f64>,
    /// Constraint offset, length `m_ν`.
    pub b: DVector<f64>,
}

impl LeaderSpec {
    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    pub fn num_constraints(&self) -> usize {
        self.b.len()
    }

    /// `g_ν(x_ν) = Aᵀx_ν + b`.
    pub fn constraints(&self, x_nu: &DVector<f64>) -> DVector<f64> {
        self.a.tr_mul(x_nu) + &self.b
    }
}

/// The follower's quadratic program with linear data `b(x) = Bᵀx`, `l(x) = Lᵀx`.
#[derive(Debug, Clone, PartialEq)]
pub struct FollowerSpec {
    /// Diagonal of `Q_y`, length `m`.
    pub qy_diag: DVector<f64>,
    /// `n × m`.
    pub b: DMatrix<f64>,
    /// `n × m`.
    pub l: DMatrix<f64>,
    /// Nonnegative weights of the follower response in every leader cost, length `m`.
    pub a: DVector<f64>,
}

impl FollowerSpec {
    pub fn dim(&self) -> usize {
        self.qy_diag.len()
    }
}

/// A complete game. Dimensions are consistent by construction; the model
/// assumptions (definiteness, sign conditions) are checked by [`validate_game`].
#[derive(Debug, Clone, PartialEq)]
pub struct GameSpec {
    leaders: Vec<LeaderSpec>,
    follower: FollowerSpec,
    offsets: Vec<usize>,
    constraint_offsets: Vec<usize>,
}

impl GameSpec {
    pub fn new(leaders: Vec<LeaderSpec>, follower: FollowerSpec) -> Result<Self, GameError> {
        if leaders.is_empty() {
            return Err(GameError::Dimension {
                field: "leaders".into(),
                expected: 1,
                found: 0,
            });
        }
        let mut offsets = vec![0];
        let mut constraint_offsets = vec![0];
        for (nu, leader) in leaders.iter().enumerate() {
            let n_nu = leader.q.nrows();
            check_dim(format!("leaders[{nu}].Q columns"), n_nu, leader.q.ncols())?;
            check_dim(format!("leaders[{nu}].c"), n_nu, leader.c.len())?;
            check_dim(format!("leaders[{nu}].A rows"), n_nu, leader.a.nrows())?;
            check_dim(format!("leaders[{nu}].b"), leader.a.ncols(), leader.b.len())?;
            offsets.push(offsets[nu] + n_nu);
            constraint_offsets.push(constraint_offsets[nu] + leader.b.len());
        }
        let n = offsets[leaders.len()];
        let m = follower.qy_diag.len();
        check_dim("follower.B rows".into(), n, follower.b.nrows())?;
        check_dim("follower.B columns".into(), m, follower.b.ncols())?;
        check_dim("follower.L rows".into(), n, follower.l.nrows())?;
        check_dim("follower.L columns".into(), m, follower.l.ncols())?;
        check_dim("follower.a".into(), m, follower.a.len())?;
        Ok(Self {
            leaders,
            follower,
            offsets,
            constraint_offsets,
        })
    }

    pub fn leaders(&self) -> &[LeaderSpec] {
        &self.leaders
    }

    pub fn leader(&self, nu: usize) -> &LeaderSpec {
        &self.leaders[nu]
    }

    pub fn follower(&self) -> &FollowerSpec {
        &self.follower
    }

    /// Number of leaders `N`.
    pub fn num_leaders(&self) -> usize {
        self.leaders.len()
    }

    /// Joint strategy dimension `n = Σ n_ν`.
    pub fn n(&self) -> usize {
        self.offsets[self.leaders.len()]
    }

    /// Follower dimension `m`.
    pub fn m(&self) -> usize {
        self.follower.dim()
    }

    /// Total number of leader constraints `m̄ = Σ m_ν`.
    pub fn m_bar(&self) -> usize {
        self.constraint_offsets[self.leaders.len()]
    }

    /// Range of leader `nu`'s variables inside the joint strategy.
    pub fn var_range(&self, nu: usize) -> std::ops::Range<usize> {
        self.offsets[nu]..self.offsets[nu + 1]
    }

    /// Range of leader `nu`'s multipliers inside the stacked `λ`.
    pub fn constraint_range(&self, nu: usize) -> std::ops::Range<usize> {
        self.constraint_offsets[nu]..self.constraint_offsets[nu + 1]
    }

    /// Block-diagonal `Q = diag(Q₁,…,Q_N)`.
    pub fn q_joint(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut q = DMatrix::zeros(n, n);
        for (nu, leader) in self.leaders.iter().enumerate() {
            let r = self.var_range(nu);
            q.view_mut((r.start, r.start), (r.len(), r.len()))
                .copy_from(&leader.q);
        }
        q
    }

    /// Stacked `c = (c₁,…,c_N)`.
    pub fn c_joint(&self) -> DVector<f64> {
        let mut c = DVector::zeros(self.n());
        for (nu, leader) in self.leaders.iter().enumerate() {
            c.rows_mut(self.offsets[nu], leader.dim()).copy_from(&leader.c);
        }
        c
    }

    /// Block-diagonal constraint Jacobian `diag(A₁,…,A_N)`, `n × m̄`.
    pub fn a_joint(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n(), self.m_bar());
        for (nu, leader) in self.leaders.iter().enumerate() {
            let r = self.var_range(nu);
            let k = self.constraint_range(nu);
            a.view_mut((r.start, k.start), (r.len(), k.len()))
                .copy_from(&leader.a);
        }
        a
    }

    /// Stacked constraint values `(g₁(x₁),…,g_N(x_N))`.
    pub fn constraints(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut g = DVector::zeros(self.m_bar());
        for (nu, leader) in self.leaders.iter().enumerate() {
            let x_nu = self.leader_block(x, nu);
            let k = self.constraint_range(nu);
            g.rows_mut(k.start, k.len())
                .copy_from(&leader.constraints(&x_nu));
        }
        g
    }

    /// Copy of leader `nu`'s block of a joint vector.
    pub fn leader_block(&self, x: &DVector<f64>, nu: usize) -> DVector<f64> {
        let r = self.var_range(nu);
        x.rows(r.start, r.len()).into_owned()
    }

    /// Smallest eigenvalue of `diag(Q₁,…,Q_N)`.
    pub fn q_min_eigenvalue(&self) -> f64 {
        self.leaders
            .iter()
            .map(|l| l.q.clone().symmetric_eigenvalues().min())
            .fold(f64::INFINITY, f64::min)
    }
}

fn check_dim(field: String, expected: usize, found: usize) -> Result<(), GameError> {
    if expected == found {
        Ok(())
    } else {
        Err(GameError::Dimension {
            field,
            expected,
            found,
        })
    }
}

/// Joint strategy `x ∈ Rⁿ` together with the stacked leader multipliers `λ ∈ R^m̄`.
///
/// Nonnegativity of `λ` is not enforced: solver iterates may leave the orthant.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalDualPoint {
    pub x: DVector<f64>,
    pub lambda: DVector<f64>,
}

impl PrimalDualPoint {
    pub fn new(x: DVector<f64>, lambda: DVector<f64>) -> Self {
        Self { x, lambda }
    }

    /// `(x, 0)`.
    pub fn primal(x: DVector<f64>, m_bar: usize) -> Self {
        Self {
            x,
            lambda: DVector::zeros(m_bar),
        }
    }

    pub fn zeros(game: &GameSpec) -> Self {
        Self::primal(DVector::zeros(game.n()), game.m_bar())
    }

    pub fn len(&self) -> usize {
        self.x.len() + self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `z = (x, λ)` as a single vector.
    pub fn to_vector(&self) -> DVector<f64> {
        let n = self.x.len();
        DVector::from_fn(self.len(), |i, _| {
            if i < n {
                self.x[i]
            } else {
                self.lambda[i - n]
            }
        })
    }

    pub fn from_vector(z: &DVector<f64>, n: usize) -> Self {
        Self {
            x: z.rows(0, n).into_owned(),
            lambda: z.rows(n, z.len() - n).into_owned(),
        }
    }

    /// `self + t·dir` where `dir` is laid out like [`to_vector`](Self::to_vector).
    pub fn step(&self, t: f64, dir: &DVector<f64>) -> Self {
        let n = self.x.len();
        Self {
            x: &self.x + dir.rows(0, n) * t,
            lambda: &self.lambda + dir.rows(n, self.lambda.len()) * t,
        }
    }

    /// Leader `nu`'s multipliers.
    pub fn lambda_nu(&self, game: &GameSpec, nu: usize) -> DVector<f64> {
        let k = game.constraint_range(nu);
        self.lambda.rows(k.start, k.len()).into_owned()
    }
}

/// Row block of an `n × m` matrix (such as `B` or `L`) that belongs to leader
/// `nu` (zero-based).
pub fn slice_rows(
    game: &GameSpec,
    mat: &DMatrix<f64>,
    nu: usize,
) -> Result<DMatrix<f64>, GameError> {
    if nu >= game.num_leaders() {
        return Err(GameError::LeaderIndex {
            index: nu,
            count: game.num_leaders(),
        });
    }
    check_dim("matrix rows".into(), game.n(), mat.nrows())?;
    let r = game.var_range(nu);
    Ok(mat.rows(r.start, r.len()).into_owned())
}

/// A model assumption that the data fails to satisfy.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Finding {
    QNotSymmetric { leader: usize, max_asymmetry: f64 },
    QNotPositiveDefinite { leader: usize },
    QyNotPositive { index: usize, value: f64 },
    NegativeWeight { index: usize, value: f64 },
    NonFinite { field: String },
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Finding::QNotSymmetric {
                leader,
                max_asymmetry,
            } => write!(
                f,
                "leader {leader}: Q not symmetric (max |Q - Qᵀ| = {max_asymmetry:e})"
            ),
            Finding::QNotPositiveDefinite { leader } => {
                write!(f, "leader {leader}: Q not positive definite")
            }
            Finding::QyNotPositive { index, value } => {
                write!(f, "Qy_diag[{index}] = {value} must be strictly positive")
            }
            Finding::NegativeWeight { index, value } => {
                write!(f, "a must be nonnegative (a[{index}] = {value})")
            }
            Finding::NonFinite { field } => write!(f, "{field} contains non-finite entries"),
        }
    }
}

/// Every data-checkable model assumption; an empty list means the game is valid.
pub fn validate_game(game: &GameSpec) -> Vec<Finding> {
    let mut findings = Vec::new();
    for (nu, leader) in game.leaders().iter().enumerate() {
        for (name, finite) in [
            ("Q", leader.q.iter().all(|v| v.is_finite())),
            ("c", leader.c.iter().all(|v| v.is_finite())),
            ("A", leader.a.iter().all(|v| v.is_finite())),
            ("b", leader.b.iter().all(|v| v.is_finite())),
        ] {
            if !finite {
                findings.push(Finding::NonFinite {
                    field: format!("leaders[{nu}].{name}"),
                });
            }
        }
        let scale = leader.q.amax();
        let asym = (&leader.q - leader.q.transpose()).amax();
        if asym > SYMMETRY_RTOL * scale {
            findings.push(Finding::QNotSymmetric {
                leader: nu,
                max_asymmetry: asym,
            });
        } else if !is_positive_definite(&leader.q) {
            findings.push(Finding::QNotPositiveDefinite { leader: nu });
        }
    }
    let follower = game.follower();
    for (name, finite) in [
        ("Qy_diag", follower.qy_diag.iter().all(|v| v.is_finite())),
        ("B", follower.b.iter().all(|v| v.is_finite())),
        ("L", follower.l.iter().all(|v| v.is_finite())),
        ("a", follower.a.iter().all(|v| v.is_finite())),
    ] {
        if !finite {
            findings.push(Finding::NonFinite {
                field: format!("follower.{name}"),
            });
        }
    }
    for (index, &value) in follower.qy_diag.iter().enumerate() {
        if !(value > 0.0) {
            findings.push(Finding::QyNotPositive { index, value });
        }
    }
    for (index, &value) in follower.a.iter().enumerate() {
        if value < 0.0 {
            findings.push(Finding::NegativeWeight { index, value });
        }
    }
    findings
}

/// Symmetric diagonal-pivoted LDLᵀ; positive definite iff every pivot exceeds
/// `1e-12 · max|Q|`.
pub fn is_positive_definite(q: &DMatrix<f64>) -> bool {
    let n = q.nrows();
    if n == 0 {
        return true;
    }
    let threshold = PIVOT_RTOL * q.amax();
    let mut work = q.clone();
    let mut remaining: Vec<usize> = (0..n).collect();
    while !remaining.is_empty() {
        let (pos, &p) = remaining
            .iter()
            .enumerate()
            .max_by(|(_, &i), (_, &j)| work[(i, i)].total_cmp(&work[(j, j)]))
            .expect("nonempty");
        let pivot = work[(p, p)];
        if !(pivot > threshold) {
            return false;
        }
        remaining.swap_remove(pos);
        for &i in &remaining {
            let lip = work[(i, p)] / pivot;
            for &j in &remaining {
                work[(i, j)] -= lip * work[(p, j)];
            }
        }
    }
    true
}

#[derive(Debug, Serialize, Deserialize)]
struct LeaderDoc {
    #[serde(rename = "Q")]
    q: Vec<Vec<f64>>,
    c: Vec<f64>,
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct FollowerDoc {
    #[serde(rename = "Qy_diag")]
    qy_diag: Vec<f64>,
    #[serde(rename = "B")]
    b: Vec<Vec<f64>>,
    #[serde(rename = "L")]
    l: Vec<Vec<f64>>,
    a: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct GameDoc {
    leaders: Vec<LeaderDoc>,
    follower: FollowerDoc,
}

fn matrix_from_rows(
    field: String,
    rows: &[Vec<f64>],
    ncols: Option<usize>,
) -> Result<DMatrix<f64>, GameError> {
    let ncols = ncols.unwrap_or_else(|| rows.first().map_or(0, Vec::len));
    for (i, row) in rows.iter().enumerate() {
        check_dim(format!("{field}[{i}]"), ncols, row.len())?;
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

fn rows_of(mat: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..mat.nrows())
        .map(|i| mat.row(i).iter().copied().collect())
        .collect()
}

/// Parse a game document without checking the model assumptions.
pub fn parse_game(text: &str) -> Result<GameSpec, GameError> {
    let doc: GameDoc = serde_json::from_str(text)?;
    let mut leaders = Vec::with_capacity(doc.leaders.len());
    for (nu, l) in doc.leaders.iter().enumerate() {
        let n_nu = l.c.len();
        let q = matrix_from_rows(format!("leaders[{nu}].Q"), &l.q, Some(n_nu))?;
        let a = matrix_from_rows(format!("leaders[{nu}].A"), &l.a, Some(l.b.len()))?;
        leaders.push(LeaderSpec {
            q,
            c: DVector::from_column_slice(&l.c),
            a,
            b: DVector::from_column_slice(&l.b),
        });
    }
    let m = doc.follower.qy_diag.len();
    let f = &doc.follower;
    let follower = FollowerSpec {
        qy_diag: DVector::from_column_slice(&f.qy_diag),
        b: matrix_from_rows("follower.B".into(), &f.b, Some(m))?,
        l: matrix_from_rows("follower.L".into(), &f.l, Some(m))?,
        a: DVector::from_column_slice(&f.a),
    };
    GameSpec::new(leaders, follower)
}

/// Parse and validate a game document.
pub fn game_from_str(text: &str) -> Result<GameSpec, GameError> {
    let game = parse_game(text)?;
    let findings = validate_game(&game);
    if findings.is_empty() {
        Ok(game)
    } else {
        Err(GameError::Validation(findings))
    }
}

/// Read, parse and validate a game file.
pub fn load_game(path: impl AsRef<Path>) -> Result<GameSpec, GameError> {
    let text = std::fs::read_to_string(path)?;
    game_from_str(&text)
}

/// Serialize a game to the JSON game format.
pub fn write_game(game: &GameSpec) -> String {
    let doc = GameDoc {
        leaders: game
            .leaders()
            .iter()
            .map(|l| LeaderDoc {
                q: rows_of(&l.q),
                c: l.c.iter().copied().collect(),
                a: rows_of(&l.a),
                b: l.b.iter().copied().collect(),
            })
            .collect(),
        follower: FollowerDoc {
            qy_diag: game.follower().qy_diag.iter().copied().collect(),
            b: rows_of(&game.follower().b),
            l: rows_of(&game.follower().l),
            a: game.follower().a.iter().copied().collect(),
        },
    };
    serde_json::to_string_pretty(&doc).expect("game documents always serialize")
}

const DATASET1: &str = include_str!("../../../data/dataset1.json");
const DATASET2: &str = include_str!("../../../data/dataset2.json");

/// One of the two bundled reference games (`1` or `2`).
pub fn bundled_dataset(id: u8) -> Result<GameSpec, GameError> {
    match id {
        1 => game_from_str(DATASET1),
        2 => game_from_str(DATASET2),
        other => Err(GameError::Dimension {
            field: "dataset id".into(),
            expected: 2,
            found: other as usize,
        }),
    }
}

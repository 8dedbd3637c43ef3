//! Coulomb friction contact on fracture cells, solved with a semismooth
//! Newton active-set strategy. Each fracture cell is classified as Open,
//! Stick or Slide from the current iterate, and contributes two linear rows
//! (normal and tangential) with coefficients frozen at the iterate.
//!
//! Conventions: the displacement jump is [[u]] = u⁻ − u⁺ decomposed in the
//! interface frame (n̂ pointing minus → plus, τ̂ along the branch). A closed
//! fracture has [[u]]_n = 0, an open one [[u]]_n < 0; the contact traction
//! is compressive when λ_n < 0 and the tangential multiplier is
//! anti-parallel to the slip increment.

use thiserror::Error;

use crate::scalar::{lit, Scalar};

#[derive(Debug, Error)]
pub enum ContactError {
    #[error(
        "friction bound degenerate on stick cell (b = {bound:.3e}, scale {scale:.3e}); \
         the tangential row is not well posed"
    )]
    DegenerateBound { bound: f64, scale: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Open,
    Stick,
    Slide,
}

impl Regime {
    /// Stable integer code used in output files.
    pub fn code(&self) -> u8 {
        match self {
            Regime::Open => 0,
            Regime::Stick => 1,
            Regime::Slide => 2,
        }
    }
}

/// Local contact quantities of one fracture cell at the current iterate.
#[derive(Debug, Clone, Copy)]
pub struct CellContact<F> {
    /// Normal contact traction λ_n (Pa), negative in compression.
    pub lambda_n: F,
    /// Tangential contact traction λ_τ (Pa).
    pub lambda_t: F,
    /// Normal displacement jump [[u]]_n (m), non-positive when admissible.
    pub jump_n: F,
    /// Tangential jump increment over the time step [[Δu]]_τ (m).
    pub djump_t: F,
}

/// Friction bound b = F·(−λ_n + c·[[u]]_n). Positive iff the cell is in
/// mechanical contact.
pub fn friction_bound<F: Scalar>(friction: F, c: F, lambda_n: F, jump_n: F) -> F {
    friction * (-lambda_n + c * jump_n)
}

/// Active-set classification of one cell from the current iterate.
pub fn classify<F: Scalar>(x: &CellContact<F>, friction: F, c: F) -> Regime {
    let b = friction_bound(friction, c, x.lambda_n, x.jump_n);
    if b <= F::zero() {
        return Regime::Open;
    }
    let w = -x.lambda_t + c * x.djump_t;
    if w.abs() < b {
        Regime::Stick
    } else {
        Regime::Slide
    }
}

/// One linearised contact row: residual value and partial derivatives with
/// respect to the four local quantities. The jump derivatives are chained to
/// the interface displacement unknowns by the assembler.
#[derive(Debug, Clone, Copy, Default)]
pub struct LocalRow<F> {
    pub residual: F,
    pub d_lambda_n: F,
    pub d_lambda_t: F,
    pub d_jump_n: F,
    pub d_djump_t: F,
}

/// Frozen coefficients of one cell's rows, captured once per Newton
/// iteration so that the residual stays exactly linear between freezes.
#[derive(Debug, Clone, Copy)]
pub struct FrozenContact<F> {
    pub regime: Regime,
    /// Stick: F·c·[[Δu^k]]_τ / b^k multiplying λ_n.
    pub stick_coef: F,
    /// Stick: right-hand side c·[[Δu^k]]_τ.
    pub stick_rhs: F,
    /// Slide: frozen direction v^k = sign(−λ_τ^k + c·[[Δu^k]]_τ).
    pub slide_dir: F,
}

/// Capture the frozen row coefficients of one cell. `traction_scale` sets
/// the magnitude below which a stick bound counts as degenerate.
pub fn freeze_cell<F: Scalar>(
    x: &CellContact<F>,
    friction: F,
    c: F,
    traction_scale: F,
) -> Result<FrozenContact<F>, ContactError> {
    freeze_with_regime(x, classify(x, friction, c), friction, c, traction_scale)
}

/// [`freeze_cell`] with two demotion safeguards that break active-set
/// cycles around marginal states; both demote a trial Slide to Stick and
/// neither can fire at a consistent sliding fixed point.
///
/// First, a sliding cell whose frozen direction flipped since the last
/// iteration (`last`) is demoted: the alternating direction is the
/// signature of a two-cycle around a sticking state — the forced cone
/// traction drives an elastic slip of the opposite sign, which flips the
/// trial term again — while at a true sliding solution the direction is
/// stationary.
///
/// Second, a cell whose tangential traction lies strictly inside the
/// friction cone is demoted: every sliding fixed point has |λ_τ| = b
/// exactly, so a Slide classification with |λ_τ| well below b means the
/// trial term is dominated by c times an unconverged slip residual, and the
/// stick row is the update that actually contracts that residual. The
/// margin keeps roundoff at a converged |λ_τ| = b state from triggering it.
pub fn freeze_cell_hinted<F: Scalar>(
    x: &CellContact<F>,
    friction: F,
    c: F,
    traction_scale: F,
    last: Option<&FrozenContact<F>>,
) -> Result<FrozenContact<F>, ContactError> {
    let mut regime = classify(x, friction, c);
    if regime == Regime::Slide {
        let b = friction_bound(friction, c, x.lambda_n, x.jump_n);
        if x.lambda_t.abs() < b * (F::one() - lit::<F>(1e-6)) {
            regime = Regime::Stick;
        } else {
            let w = -x.lambda_t + c * x.djump_t;
            let dir = if w >= F::zero() { F::one() } else { -F::one() };
            if let Some(l) = last {
                if l.regime == Regime::Slide && l.slide_dir == -dir {
                    regime = Regime::Stick;
                }
            }
        }
    }
    freeze_with_regime(x, regime, friction, c, traction_scale)
}

fn freeze_with_regime<F: Scalar>(
    x: &CellContact<F>,
    regime: Regime,
    friction: F,
    c: F,
    traction_scale: F,
) -> Result<FrozenContact<F>, ContactError> {
    let b = friction_bound(friction, c, x.lambda_n, x.jump_n);
    let mut frozen = FrozenContact {
        regime,
        stick_coef: F::zero(),
        stick_rhs: F::zero(),
        slide_dir: F::zero(),
    };
    match regime {
        Regime::Open => {}
        Regime::Stick => {
            let tol = lit::<F>(1e-12) * traction_scale;
            if b <= tol {
                // a vanishing bound is harmless while the frozen slip
                // vanishes with it (the λ_n feedback term is simply absent);
                // finite slip at zero normal force is genuinely ill posed
                if (c * x.djump_t).abs() > tol {
                    return Err(ContactError::DegenerateBound {
                        bound: b.to_subset().unwrap_or(f64::NAN),
                        scale: traction_scale.to_subset().unwrap_or(f64::NAN),
                    });
                }
                frozen.stick_rhs = c * x.djump_t;
            } else {
                // the sign makes the slip update contractive under the
                // compression-negative convention: with λ_n ≈ −b/F the new
                // slip becomes δ^k(1 + F·λ_n/b) ≈ 0 instead of doubling
                frozen.stick_coef = -friction * c * x.djump_t / b;
                frozen.stick_rhs = c * x.djump_t;
            }
        }
        Regime::Slide => {
            let w = -x.lambda_t + c * x.djump_t;
            frozen.slide_dir = if w >= F::zero() { F::one() } else { -F::one() };
        }
    }
    Ok(frozen)
}

/// The two rows of one fracture cell given its frozen coefficients and the
/// current local values. Row 0 closes λ_n, row 1 closes λ_τ.
pub fn contact_rows<F: Scalar>(
    frozen: &FrozenContact<F>,
    x: &CellContact<F>,
    friction: F,
    c: F,
) -> [LocalRow<F>; 2] {
    let mut row_n = LocalRow::default();
    let mut row_t = LocalRow::default();
    match frozen.regime {
        Regime::Open => {
            row_n.residual = x.lambda_n;
            row_n.d_lambda_n = F::one();
            row_t.residual = x.lambda_t;
            row_t.d_lambda_t = F::one();
        }
        Regime::Stick => {
            row_n.residual = c * x.jump_n;
            row_n.d_jump_n = c;
            row_t.residual = c * x.djump_t + frozen.stick_coef * x.lambda_n - frozen.stick_rhs;
            row_t.d_djump_t = c;
            row_t.d_lambda_n = frozen.stick_coef;
        }
        Regime::Slide => {
            row_n.residual = c * x.jump_n;
            row_n.d_jump_n = c;
            row_t.residual = x.lambda_t - friction * frozen.slide_dir * x.lambda_n;
            row_t.d_lambda_t = F::one();
            row_t.d_lambda_n = -friction * frozen.slide_dir;
        }
    }
    [row_n, row_t]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(lambda_n: f64, lambda_t: f64, jump_n: f64, djump_t: f64) -> CellContact<f64> {
        CellContact {
            lambda_n,
            lambda_t,
            jump_n,
            djump_t,
        }
    }

    #[test]
    fn friction_bound_substitution() {
        // F = 0.5, λ_n = −2 Pa, c·[[u]]_n = 0 → b = 1 Pa
        let b = friction_bound(0.5, 100.0, -2.0, 0.0);
        assert_eq!(b, 1.0);
    }

    #[test]
    fn classification_covers_all_regimes() {
        let (f, c) = (0.5, 100.0);
        // tensile multiplier → open
        assert_eq!(classify(&cell(1.0, 0.0, -1e-3, 0.0), f, c), Regime::Open);
        // compressed, tangential excitation below the bound → stick
        assert_eq!(classify(&cell(-2.0, 0.0, 0.0, 1e-3), f, c), Regime::Stick);
        // |−λ_τ + c·Δu_τ| = |0.1 + 10| far above b = 1 → slide
        assert_eq!(classify(&cell(-2.0, -0.1, 0.0, 0.1), f, c), Regime::Slide);
    }

    #[test]
    fn stick_rows_vanish_for_a_sticking_state() {
        let (f, c) = (0.5, 100.0);
        let x = cell(-2.0, 0.3, 0.0, 0.0);
        let frozen = freeze_cell(&x, f, c, 1.0).unwrap();
        assert_eq!(frozen.regime, Regime::Stick);
        let [rn, rt] = contact_rows(&frozen, &x, f, c);
        assert_eq!(rn.residual, 0.0);
        assert_eq!(rt.residual, 0.0);
    }

    #[test]
    fn slide_row_vanishes_on_coulomb_satisfying_states() {
        // sliding with the multiplier exactly on the cone, anti-parallel to
        // the slip increment: the linearised row must evaluate to zero
        let (f, c) = (0.6, 250.0);
        let mut seed = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            (seed >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..100 {
            let lambda_n = -(1.0 + 9.0 * next()) * 1e6;
            let slip = (next() - 0.5).signum() * (1e-6 + 1e-3 * next());
            let b = f * (-lambda_n);
            let x = cell(lambda_n, -b * slip.signum(), 0.0, slip);
            let frozen = freeze_cell(&x, f, c, 1e6).unwrap();
            assert_eq!(frozen.regime, Regime::Slide);
            assert_eq!(frozen.slide_dir, slip.signum());
            let [_, rt] = contact_rows(&frozen, &x, f, c);
            assert!(rt.residual.abs() < 1e-9 * b, "residual {}", rt.residual);
        }
    }

    #[test]
    fn slide_fixed_point_is_anti_parallel() {
        // at a fixed point the row gives λ_τ = F·v·λ_n = −b·v: anti-parallel
        // to the slip direction v
        let (f, c) = (0.5, 100.0);
        let x = cell(-4.0, 0.0, 0.0, 0.1);
        let frozen = freeze_cell(&x, f, c, 1.0).unwrap();
        assert_eq!(frozen.regime, Regime::Slide);
        let lambda_t_fixed = f * frozen.slide_dir * x.lambda_n;
        assert_eq!(lambda_t_fixed, -2.0);
        assert!(lambda_t_fixed * x.djump_t < 0.0);
    }

    #[test]
    fn degenerate_stick_bound_is_an_error() {
        let (f, c) = (0.5, 100.0);
        // finite frozen slip at vanishing normal force: the λ_n feedback
        // coefficient of the stick row blows up
        let x = cell(-1e-20, 1.0, 0.0, 0.01);
        assert_eq!(classify(&x, f, c), Regime::Stick);
        assert!(matches!(
            freeze_cell(&x, f, c, 1.0),
            Err(ContactError::DegenerateBound { .. })
        ));
        // the same vanishing bound with vanishing slip is harmless
        let quiet = cell(-1e-20, 0.0, 0.0, 0.0);
        let frozen = freeze_cell(&quiet, f, c, 1.0).unwrap();
        assert_eq!(frozen.stick_coef, 0.0);
    }
}

//! Legendre-Fenchel game, restricted to the power loss instance
//! l_2(y) = y h(y), l_1 = kappa l_2, h(x) = x^{2k-1} / (2k), so
//! l_2(u) = u^{2k} / (2k) and the conjugate is
//! l_2*(p) = (2k-1)/(2k) |p|^{2k/(2k-1)} with (l_2*)'(p) = p^{1/(2k-1)}.
//!
//! The matching constants eta_ii, eta_ij, gamma_j are derived symbolically
//! for this instance (constants independent of x):
//!
//!   G_j    = sroot(-alpha_j b2_j / r_jj, 2k-1) / (2k)^{1/(2k-1)}   (u_j* = G_j x)
//!   eta_ii = (2k-1) r_ii G_i^{2k} / kappa
//!   eta_ij = r_ij G_j^{2k} / kappa
//!   gamma_j = G_j / kappa

use super::{require, sroot, Coeff, ComponentDesc, GameDefinition, InitialState, Layout};
use crate::error::{Error, Result};
use crate::field::RegimeField;
use crate::grid::TimeGrid;
use crate::regime::RegimeGenerator;

#[derive(Debug, Clone)]
pub struct FenchelPlayer {
    pub q: Coeff,
    pub q_terminal: Coeff,
    pub b2: Coeff,
}

#[derive(Debug, Clone)]
pub struct FenchelSpec {
    pub players: Vec<FenchelPlayer>,
    /// Control-cost weights r_{ij}(s): player i pays r_ij l_2(u_j).
    pub r: Vec<Vec<Coeff>>,
    pub b1: Coeff,
    pub sigma1: Coeff,
    pub sigma2: Coeff,
    /// Loss family name; only "power" is supported.
    pub loss: String,
    pub k: u32,
    pub kappa: f64,
    pub x0: f64,
    pub s0: usize,
    pub gen: RegimeGenerator,
    pub grid: TimeGrid,
}

#[derive(Debug, Clone)]
pub struct FenchelGame {
    pub spec: FenchelSpec,
    pub layout: Layout,
}

pub fn build_legendre_fenchel(spec: FenchelSpec) -> Result<GameDefinition> {
    if spec.loss != "power" {
        return Err(Error::UnsupportedLoss(format!(
            "only the power family l_2(u) = u^{{2k}}/(2k) is supported, got `{}`",
            spec.loss
        )));
    }
    let states = spec.gen.num_states();
    let n = spec.players.len();
    require(n > 0, "legendre_fenchel needs at least one player")?;
    require(spec.k >= 1, "power exponent k must be an integer >= 1")?;
    require(
        spec.kappa > 0.0 && spec.kappa.is_finite(),
        "kappa (l_1 = kappa l_2 scale) must be positive",
    )?;
    require(spec.s0 < states, "initial regime out of range")?;
    spec.b1.validate(states, "b1")?;
    spec.sigma1.validate(states, "sigma1")?;
    spec.sigma2.validate(states, "sigma2")?;
    require(spec.r.len() == n, "r must be an I x I matrix of coefficients")?;
    for (i, row) in spec.r.iter().enumerate() {
        require(row.len() == n, "r must be an I x I matrix of coefficients")?;
        for (j, c) in row.iter().enumerate() {
            c.validate(states, "r_ij")?;
            require(
                c.all(|v| v > 0.0),
                format!("r[{i}][{j}] > 0 required"),
            )?;
        }
    }
    for (i, p) in spec.players.iter().enumerate() {
        p.q.validate(states, "q")?;
        p.q_terminal.validate(states, "q_terminal")?;
        p.b2.validate(states, "b2")?;
        require(p.q.all(|v| v > 0.0), format!("player {i}: q_i > 0 required"))?;
    }
    let mut components = Vec::new();
    for i in 0..n {
        components.push(ComponentDesc {
            name: format!("alpha_{i}"),
            alpha_like: true,
        });
        components.push(ComponentDesc {
            name: format!("delta_{i}"),
            alpha_like: false,
        });
    }
    let layout = Layout { states, components };
    Ok(GameDefinition::LegendreFenchel(FenchelGame { spec, layout }))
}

impl FenchelGame {
    fn alpha_idx(&self, i: usize, s: usize) -> usize {
        self.layout.idx(2 * i, s)
    }

    fn delta_idx(&self, i: usize, s: usize) -> usize {
        self.layout.idx(2 * i + 1, s)
    }

    /// Per-x feedback coefficient: u_j* = G_j x.
    pub fn gain_coeff(&self, alpha_js: f64, j: usize, s: usize) -> f64 {
        let m = 2 * self.spec.k - 1;
        let two_k = 2.0 * f64::from(self.spec.k);
        sroot(
            -alpha_js * self.spec.players[j].b2.get(s) / self.spec.r[j][j].get(s),
            m,
        ) / two_k.powf(1.0 / f64::from(m))
    }

    pub fn l1(&self, x: f64) -> f64 {
        let two_k = 2 * self.spec.k;
        self.spec.kappa * x.powi(two_k as i32) / f64::from(two_k)
    }

    pub fn l2(&self, u: f64) -> f64 {
        let two_k = 2 * self.spec.k;
        u.powi(two_k as i32) / f64::from(two_k)
    }

    pub fn rhs(&self, t: f64, y: &[f64], out: &mut [f64]) -> Result<()> {
        let spec = &self.spec;
        let states = self.layout.states;
        let n = spec.players.len();
        let two_k = 2 * spec.k as i32;
        let kappa = spec.kappa;
        for s in 0..states {
            let gains: Vec<f64> = (0..n)
                .map(|j| self.gain_coeff(y[self.alpha_idx(j, s)], j, s))
                .collect();
            for i in 0..n {
                let a = y[self.alpha_idx(i, s)];
                let sw_a = spec.gen.switching_sum(t, s, |sp| y[self.alpha_idx(i, sp)]);
                let sig2 = spec.sigma2.get(s);
                let eta_ii = (f64::from(two_k as u32) - 1.0) * spec.r[i][i].get(s)
                    * gains[i].powi(two_k)
                    / kappa;
                let mut cross = 0.0;
                for j in 0..n {
                    if j == i {
                        continue;
                    }
                    let eta_ij = spec.r[i][j].get(s) * gains[j].powi(two_k) / kappa;
                    let gamma_j = gains[j] / kappa;
                    cross += eta_ij + a * spec.players[j].b2.get(s) * gamma_j;
                }
                out[self.alpha_idx(i, s)] =
                    -spec.players[i].q.get(s) - a * (spec.b1.get(s) + 0.5 * sig2 * sig2) - sw_a
                        + eta_ii
                        - cross;

                let sw_d = spec.gen.switching_sum(t, s, |sp| y[self.delta_idx(i, sp)]);
                let sig1 = spec.sigma1.get(s);
                out[self.delta_idx(i, s)] = -0.5 * sig1 * sig1 - sw_d;
            }
        }
        Ok(())
    }

    pub fn terminal(&self) -> Vec<f64> {
        let states = self.layout.states;
        let mut v = vec![0.0; self.layout.dim()];
        for (i, p) in self.spec.players.iter().enumerate() {
            for s in 0..states {
                v[self.alpha_idx(i, s)] = p.q_terminal.get(s);
            }
        }
        v
    }

    pub fn value(&self, fields: &[RegimeField], init: &InitialState) -> Result<Vec<f64>> {
        let l1 = self.l1(init.x0);
        Ok((0..self.spec.players.len())
            .map(|i| fields[2 * i].at_node(0, init.s0) * l1 + fields[2 * i + 1].at_node(0, init.s0))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(k: u32, kappa: f64) -> FenchelSpec {
        FenchelSpec {
            players: vec![FenchelPlayer {
                q: Coeff::constant(1.0, 1),
                q_terminal: Coeff::constant(0.5, 1),
                b2: Coeff::constant(1.0, 1),
            }],
            r: vec![vec![Coeff::constant(1.0, 1)]],
            b1: Coeff::constant(0.1, 1),
            sigma1: Coeff::constant(0.2, 1),
            sigma2: Coeff::constant(0.3, 1),
            loss: "power".into(),
            k,
            kappa,
            x0: 1.5,
            s0: 0,
            gen: RegimeGenerator::single("s"),
            grid: TimeGrid::new(1.0, 64).unwrap(),
        }
    }

    #[test]
    fn rejects_non_power_loss() {
        let mut s = spec(1, 1.0);
        s.loss = "entropy".into();
        assert!(matches!(
            build_legendre_fenchel(s),
            Err(Error::UnsupportedLoss(_))
        ));
    }

    #[test]
    fn quadratic_instance_matching_constants() {
        // k = 1, kappa = 1: u* = -(alpha b / r) x / 2 and
        // eta_ii = b^2 alpha^2 / (4 r kappa)
        let def = build_legendre_fenchel(spec(1, 1.0)).unwrap();
        if let GameDefinition::LegendreFenchel(g) = &def {
            let alpha = 0.7;
            let gain = g.gain_coeff(alpha, 0, 0);
            assert!((gain - (-alpha / 2.0)).abs() < 1e-14);
            let eta = 1.0 * gain * gain; // (2k-1) r G^2 / kappa
            assert!((eta - alpha * alpha / 4.0).abs() < 1e-14);
        } else {
            panic!("wrong variant");
        }
    }

    #[test]
    fn numeric_conjugate_oracle() {
        // For 20 sampled p, max_u (p u - l2(u)) equals (2k-1)/(2k) |p|^{2k/(2k-1)}
        // to 1e-8 (grid search plus golden-section refinement).
        for k in [1u32, 2] {
            let two_k = f64::from(2 * k);
            let l2 = |u: f64| u.powi(2 * k as i32) / two_k;
            for n in 0..20 {
                let p = -2.0 + 4.2 * (n as f64) / 19.0 + 0.05;
                // bracket the maximizer of g(u) = p u - l2(u)
                let g = |u: f64| p * u - l2(u);
                let (mut lo, mut hi) = (-4.0, 4.0);
                for _ in 0..200 {
                    let m1 = lo + (hi - lo) / 3.0;
                    let m2 = hi - (hi - lo) / 3.0;
                    if g(m1) < g(m2) {
                        lo = m1;
                    } else {
                        hi = m2;
                    }
                }
                let numeric = g(0.5 * (lo + hi));
                let closed = (two_k - 1.0) / two_k * p.abs().powf(two_k / (two_k - 1.0));
                assert!(
                    (numeric - closed).abs() < 1e-8,
                    "k={k} p={p}: numeric {numeric} closed {closed}"
                );
            }
        }
    }
}

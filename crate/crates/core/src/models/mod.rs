//! Model parameters and right-hand sides of the NLS, Grenier, limit and
//! linearized systems.

pub mod data;
mod params;
pub mod presets;
mod state;
mod system;

pub use data::{analytic_profile, default_data, scale_to_norm, DataNorms, WkbData};
pub use params::{ModelParams, NonlocalTerm, Potential};
pub use presets::Preset;
pub use state::GrenierState;
pub use system::Model;

#[cfg(test)]
mod tests {
    use num_complex::Complex64;

    use super::*;
    use crate::kernels::KernelSpec;
    use crate::rng::CounterRng;
    use crate::spectral::{dealiased_product, partial_derivative, Grid, SpectralField, SymMatrix};

    fn random_band(grid: &Grid, band: i64, amp: f64, seed: u64, real: bool) -> SpectralField {
        let mut rng = CounterRng::new(seed);
        let mut f = SpectralField::zeros(grid);
        for flat in 0..grid.len() {
            let z = rng.complex_normal();
            if !grid.is_nyquist(flat) && grid.mode_of(flat).iter().all(|m| m.abs() <= band) {
                f.coeffs_mut()[flat] = z * amp;
            }
        }
        if real {
            f.real_part()
        } else {
            f
        }
    }

    fn random_state(grid: &Grid, seed: u64) -> GrenierState {
        GrenierState::new(
            random_band(grid, 3, 0.1, seed, true),
            random_band(grid, 3, 0.1, seed + 1, false),
        )
        .unwrap()
    }

    fn close(a: &SpectralField, b: &SpectralField, tol: f64) -> bool {
        let scale = a.max_abs().max(b.max_abs()).max(1e-300);
        (a - b).max_abs() <= tol * scale
    }

    fn prod(fs: &[&SpectralField]) -> SpectralField {
        dealiased_product(fs).unwrap()
    }

    fn grid2() -> Grid {
        Grid::torus(&[16, 16]).unwrap()
    }

    fn general_params() -> ModelParams {
        let mut p = presets::davey_stewartson(0.7, -0.4, false, 2.0, 1.0);
        p.h = SymMatrix::new(2, vec![1.0, 0.3, 0.3, -0.5]).unwrap();
        p.beta = vec![0.4, -0.2];
        p.alpha = 0.8;
        p.gamma = 2;
        p.epsilon = 0.3;
        p
    }

    #[test]
    fn monomials_match_examples() {
        let g = grid2();
        let mut p = presets::hyperbolic_nls(1.0, 2.0, 1.0);
        let two = SpectralField::constant(&g, Complex64::new(2.0, 0.0));
        let m = Model::new(p.clone(), &g).unwrap();
        assert!(close(&m.g_eval(&two).unwrap(), &two, 1e-14));
        let one = SpectralField::constant(&g, Complex64::new(1.0, 0.0));
        assert!(close(&m.g_prime(&two).unwrap(), &one, 1e-14));
        assert!(close(&m.h_eval(&two).unwrap(), &one, 1e-14));
        p.alpha = 2.0;
        p.gamma = 3;
        let m = Model::new(p, &g).unwrap();
        let c = |v: f64| SpectralField::constant(&g, Complex64::new(v, 0.0));
        assert!(close(&m.g_eval(&two).unwrap(), &c(16.0), 1e-14));
        assert!(close(&m.g_prime(&two).unwrap(), &c(24.0), 1e-14));
        assert!(close(&m.h_eval(&two).unwrap(), &c(8.0), 1e-14));
        // g(s) = s h(s) for a random real s.
        let s = random_band(&g, 2, 0.3, 4, true);
        let lhs = m.g_eval(&s).unwrap();
        let rhs = prod(&[&s, &m.h_eval(&s).unwrap()]);
        assert!(close(&lhs, &rhs, 1e-12));
    }

    #[test]
    fn hyperbolic_grenier_matches_written_out_system() {
        let g = grid2();
        for sign in [1.0, -1.0] {
            let mut p = presets::hyperbolic_nls(sign, 2.0, 1.0);
            p.epsilon = 0.2;
            let m = Model::new(p, &g).unwrap();
            let st = random_state(&g, 11);
            let rhs = m.grenier_rhs(&st, 0.0).unwrap();
            let d1p = partial_derivative(&st.phi, 0).unwrap();
            let d2p = partial_derivative(&st.phi, 1).unwrap();
            let d1a = partial_derivative(&st.a, 0).unwrap();
            let d2a = partial_derivative(&st.a, 1).unwrap();
            let abar = st.a.conj();
            // phi_t = -(1/2)(|d1 phi|^2 - |d2 phi|^2) +- |a|^2
            let mut phi_t = (&prod(&[&d2p, &d2p]) - &prod(&[&d1p, &d1p])) * 0.5;
            phi_t.axpy(sign.into(), &prod(&[&st.a, &abar]));
            assert!(close(&rhs.phi, &phi_t, 1e-12));
            // a_t = -(d1 phi d1 a - d2 phi d2 a) - (1/2) a (d1^2 phi - d2^2 phi) + (i eps/2)(d1^2 a - d2^2 a)
            let d11p = partial_derivative(&d1p, 0).unwrap();
            let d22p = partial_derivative(&d2p, 1).unwrap();
            let d11a = partial_derivative(&d1a, 0).unwrap();
            let d22a = partial_derivative(&d2a, 1).unwrap();
            let mut a_t = &prod(&[&d2p, &d2a]) - &prod(&[&d1p, &d1a]);
            a_t.axpy((-0.5).into(), &prod(&[&st.a, &(&d11p - &d22p)]));
            a_t.axpy(Complex64::new(0.0, 0.1), &(&d11a - &d22a));
            assert!(close(&rhs.a, &a_t, 1e-12));
        }
    }

    #[test]
    fn zero_dispersion_constant_state() {
        let g = grid2();
        let mut p = general_params();
        p.h = SymMatrix::zeros(2);
        p.beta = vec![0.0, 0.0];
        let m = Model::new(p.clone(), &g).unwrap();
        let amp = Complex64::new(0.6, -0.3);
        let st = GrenierState::new(
            SpectralField::zeros(&g),
            SpectralField::constant(&g, amp),
        )
        .unwrap();
        let rhs = m.grenier_rhs(&st, 0.0).unwrap();
        // DS symbol vanishes at xi = 0, so only the identity weight survives.
        let want = -p.nonlocal[0].weight * amp.norm_sqr();
        let expect = SpectralField::constant(&g, want.into());
        assert!(close(&rhs.phi, &expect, 1e-14));
        assert!(rhs.a.max_abs() < 1e-15);
    }

    #[test]
    fn phase_derivative_is_real_and_limit_is_eps_zero() {
        let g = grid2();
        let m = Model::new(general_params(), &g).unwrap();
        let st = random_state(&g, 21);
        let rhs = m.grenier_rhs(&st, 0.0).unwrap();
        assert_eq!(rhs.phi.conjugate_asymmetry(), 0.0);
        let lim = m.limit_rhs(&st, 0.0).unwrap();
        let zero = m.with_epsilon(0.0).unwrap().grenier_rhs(&st, 0.0).unwrap();
        assert_eq!(lim, zero);
    }

    #[test]
    fn hyperbolic_limit_velocity_form() {
        let g = grid2();
        for sign in [1.0, -1.0] {
            let m = Model::new(presets::hyperbolic_nls(sign, 2.0, 1.0), &g).unwrap();
            let st = random_state(&g, 31);
            let phi_t = m.limit_rhs(&st, 0.0).unwrap().phi;
            let v: Vec<SpectralField> = (0..2).map(|j| partial_derivative(&st.phi, j).unwrap()).collect();
            let rho = prod(&[&st.a, &st.a.conj()]);
            for j in 0..2 {
                let vt = partial_derivative(&phi_t, j).unwrap();
                // d_t v_j = -(v_1 d_1 v_j - v_2 d_2 v_j) +- d_j rho
                let d1vj = partial_derivative(&v[j], 0).unwrap();
                let d2vj = partial_derivative(&v[j], 1).unwrap();
                let mut want = &prod(&[&v[1], &d2vj]) - &prod(&[&v[0], &d1vj]);
                want.axpy(sign.into(), &partial_derivative(&rho, j).unwrap());
                assert!(close(&vt, &want, 1e-11));
            }
        }
    }

    #[test]
    fn linearized_zero_background_is_transport() {
        let g = grid2();
        let m = Model::new(general_params(), &g).unwrap();
        let bg = GrenierState::new(random_band(&g, 3, 0.2, 41, true), SpectralField::zeros(&g)).unwrap();
        let corr = random_state(&g, 43);
        let out = m.linearized_rhs(&corr, &bg, 0.0).unwrap();
        let h = &m.params().h;
        let gp: Vec<_> = (0..2).map(|j| partial_derivative(&bg.phi, j).unwrap()).collect();
        let gp1: Vec<_> = (0..2).map(|j| partial_derivative(&corr.phi, j).unwrap()).collect();
        let ga1: Vec<_> = (0..2).map(|j| partial_derivative(&corr.a, j).unwrap()).collect();
        let mut phi_t = SpectralField::zeros(&g);
        let mut a_t = SpectralField::zeros(&g);
        for i in 0..2 {
            for j in 0..2 {
                phi_t.axpy((-h.get(i, j)).into(), &prod(&[&gp[i], &gp1[j]]));
                a_t.axpy((-h.get(i, j)).into(), &prod(&[&gp[i], &ga1[j]]));
            }
        }
        a_t.axpy((-0.5).into(), &prod(&[&corr.a, &m.apply_d2(&bg.phi)]));
        assert!(close(&out.phi, &phi_t, 1e-12));
        assert!(close(&out.a, &a_t, 1e-12));
    }

    #[test]
    fn linearized_zero_corrector_returns_source() {
        let g = grid2();
        let m = Model::new(general_params(), &g).unwrap();
        let bg = random_state(&g, 51);
        let out = m.linearized_rhs(&bg.zeros_like(), &bg, 0.0).unwrap();
        assert_eq!(out.phi.max_abs(), 0.0);
        let src = m.apply_d2(&bg.a).scaled(Complex64::new(0.0, 0.5));
        assert!(close(&out.a, &src, 1e-15));
    }

    #[test]
    fn linearized_constant_background_closed_form() {
        let g = grid2();
        let mut p = general_params();
        p.h = SymMatrix::zeros(2);
        let m = Model::new(p.clone(), &g).unwrap();
        let amp = Complex64::new(0.5, 0.2);
        let bg = GrenierState::new(SpectralField::zeros(&g), SpectralField::constant(&g, amp)).unwrap();
        let corr = random_state(&g, 61);
        let out = m.linearized_rhs(&corr, &bg, 0.0).unwrap();
        // grad phi = 0: phi1_t = -g(A^2) <beta, grad phi1> - 2 sum_j w_j sigma_j K_j(A^{2 sigma_j - 2} Re(conj(A) a1)).
        let s = amp.norm_sqr();
        let r = (&corr.a.scaled(amp.conj()) + &corr.a.conj().scaled(amp)) * 0.5;
        let beta_grad = |f: &SpectralField| {
            let mut out = partial_derivative(f, 0).unwrap() * p.beta[0];
            out.axpy(p.beta[1].into(), &partial_derivative(f, 1).unwrap());
            out
        };
        let g_s = p.alpha * s.powi(p.gamma as i32);
        let g1_s = p.alpha * p.gamma as f64 * s.powi(p.gamma as i32 - 1);
        let mut phi_t = beta_grad(&corr.phi) * (-g_s);
        for term in &p.nonlocal {
            let k = crate::kernels::apply_kernel(&term.kernel, &r.real_part()).unwrap();
            phi_t.axpy((-2.0 * term.weight * term.sigma as f64).into(), &k);
        }
        assert!(close(&out.phi, &phi_t, 1e-12));
        // a1_t = -<beta, grad(g a1 + 2 A g' r)>
        let mut flux = corr.a.scaled(g_s.into());
        flux.axpy(amp * 2.0 * g1_s, &r);
        let a_t = -&beta_grad(&flux);
        assert!(close(&out.a, &a_t, 1e-12));
    }

    #[test]
    fn linearization_matches_finite_difference() {
        let g = grid2();
        let m = Model::new(general_params(), &g).unwrap();
        let bg = random_state(&g, 71);
        let dir = random_state(&g, 73);
        let lin = m.linearized_parts(&dir, &bg, 0.0, false).unwrap();
        let base = m.limit_rhs(&bg, 0.0).unwrap();
        let mut errs = Vec::new();
        for h in [1e-3, 5e-4] {
            let mut pert = bg.clone();
            pert.phi.axpy(h.into(), &dir.phi);
            pert.a.axpy(h.into(), &dir.a);
            let fd = m.limit_rhs(&pert, 0.0).unwrap();
            let dphi = (&fd.phi - &base.phi) * (1.0 / h) - &lin.phi;
            let da = (&fd.a - &base.a) * (1.0 / h) - &lin.a;
            errs.push(dphi.max_abs() + da.max_abs());
        }
        let scale = lin.phi.max_abs() + lin.a.max_abs();
        assert!(errs[0] < 1e-2 * scale);
        // First order in h.
        let ratio = errs[0] / errs[1];
        assert!((1.8..2.2).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn picard_fixed_point_is_grenier() {
        let g = grid2();
        let m = Model::new(general_params(), &g).unwrap();
        let st = random_state(&g, 81);
        let mut pic = m.picard_rhs(&st, &st, 0.0).unwrap();
        pic.a += &m.apply_d2(&st.a).scaled(Complex64::new(0.0, 0.5 * m.epsilon()));
        let gr = m.grenier_rhs(&st, 0.0).unwrap();
        assert!(close(&pic.phi, &gr.phi, 1e-12));
        assert!(close(&pic.a, &gr.a, 1e-12));
    }

    #[test]
    fn nls_pure_dispersion_and_hyperbolic_form() {
        let g = grid2();
        let mut p = presets::free(2, 2.0, 1.0);
        p.h = SymMatrix::diag(&[1.0, -1.0]);
        p.epsilon = 0.5;
        let m = Model::new(p, &g).unwrap();
        let u = SpectralField::plane_wave(&g, &[2, 1]).unwrap();
        let want = u.scaled(Complex64::new(0.0, -0.25 * (4.0 - 1.0)));
        assert!(close(&m.nls_rhs(&u, 0.0).unwrap(), &want, 1e-15));

        for sign in [1.0, -1.0] {
            let mut p = presets::hyperbolic_nls(sign, 2.0, 1.0);
            p.epsilon = 1.0;
            let m = Model::new(p, &g).unwrap();
            let psi = random_band(&g, 3, 0.2, 91, false);
            // i psi_t + (1/2)(psi_11 - psi_22) +- |psi|^2 psi = 0
            let d11 = partial_derivative(&partial_derivative(&psi, 0).unwrap(), 0).unwrap();
            let d22 = partial_derivative(&partial_derivative(&psi, 1).unwrap(), 1).unwrap();
            let mut want = (&d11 - &d22).scaled(Complex64::new(0.0, 0.5));
            want.axpy(Complex64::new(0.0, sign), &prod(&[&psi, &psi.conj(), &psi]));
            assert!(close(&m.nls_rhs(&psi, 0.0).unwrap(), &want, 1e-12));
        }
    }

    #[test]
    fn nls_rhs_conserves_mass() {
        let g = grid2();
        let mut p = general_params();
        p.potential = Potential::Static(random_band(&g, 2, 0.5, 101, true));
        let m = Model::new(p, &g).unwrap();
        let u = random_band(&g, 3, 0.3, 103, false);
        let rhs = m.nls_rhs(&u, 0.0).unwrap();
        let dot: f64 = u.coeffs().iter().zip(rhs.coeffs()).map(|(a, b)| (a.conj() * b).re).sum();
        let scale: f64 = u.energy().sqrt() * rhs.energy().sqrt();
        assert!(dot.abs() <= 1e-11 * scale, "{dot} vs {scale}");
        assert!(m.with_epsilon(0.0).unwrap().nls_rhs(&u, 0.0).is_err());
    }

    #[test]
    fn potential_interpolates_linearly() {
        let g = grid2();
        let v0 = SpectralField::constant(&g, 1.0.into());
        let v1 = SpectralField::constant(&g, 3.0.into());
        let pot = Potential::time_stamped(vec![(1.0, v1.clone()), (0.0, v0.clone())]).unwrap();
        let mid = pot.at(0.25).unwrap();
        assert!(close(&mid, &SpectralField::constant(&g, 1.5.into()), 1e-15));
        assert_eq!(pot.at(-1.0).unwrap(), v0);
        assert_eq!(pot.at(2.0).unwrap(), v1);
        let complex = SpectralField::plane_wave(&g, &[1, 0]).unwrap();
        let mut p = presets::hyperbolic_nls(1.0, 2.0, 1.0);
        p.potential = Potential::Static(complex);
        assert!(matches!(Model::new(p, &g), Err(crate::Error::Context { .. })));
    }

    #[test]
    fn validation_catches_bad_parameters() {
        let mut p = presets::hyperbolic_nls(1.0, 2.0, 1.0);
        p.ell = 1.5;
        assert!(p.validate().is_err());
        let mut p = presets::hyperbolic_nls(1.0, 2.0, 1.0);
        p.epsilon = 1.5;
        assert!(p.validate().is_err());
        let mut p = presets::hyperbolic_nls(1.0, 2.0, 1.0);
        p.nonlocal.push(NonlocalTerm::new(1, KernelSpec::DaveyStewartson { p: 0, q: 2 }, 1.0));
        assert!(p.validate().is_err());
        let p = presets::hyperbolic_nls(1.0, 2.0, 1.0);
        assert_eq!(p.product_order(), 3);
    }
}

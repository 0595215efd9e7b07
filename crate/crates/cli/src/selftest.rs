use vampire_core::channels::DetectorModel;
use vampire_core::scenarios::{bob_mean_photons_simulated, gaussian_profile};
use vampire_core::{
    apply_beamsplitter, attenuate, click_povm, exact_annihilation, fidelity, shadow_demo, unconditional_map,
    AttenuationChannel, BeamSplitter, MixedState, ModeSet, PureState, QuantumState, ShadowMechanism, C64,
};

/// Outcome of one self-test check.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn check(name: &'static str, f: impl FnOnce() -> vampire_core::Result<(bool, String)>) -> Check {
    match f() {
        Ok((pass, detail)) => Check { name, pass, detail },
        Err(e) => Check {
            name,
            pass: false,
            detail: format!("error: {e}"),
        },
    }
}

fn test_state() -> vampire_core::Result<PureState> {
    let amps: Vec<C64> = (0..=4)
        .map(|n| C64::from_polar(1.0 / (n as f64 + 1.0), 0.7 * n as f64))
        .collect();
    let (psi, _) = PureState::from_amplitudes(ModeSet::single(4)?, amps)?.normalize()?;
    Ok(psi)
}

/// Fast deterministic invariants of the simulator.
pub fn selftest() -> Vec<Check> {
    let bs = BeamSplitter::new(C64::from_polar(0.6, 0.4), C64::from_polar(0.8, -1.1)).expect("unit norm");
    vec![
        check("split annihilation identity", || {
            let psi = test_state()?;
            let split = |s: &PureState| -> vampire_core::Result<PureState> {
                Ok(apply_beamsplitter(&s.embed(1), 0, 1, &bs)?.value)
            };
            let lhs = split(&psi)?.apply_annihilation(0)?;
            let rhs = split(&psi.apply_annihilation(0)?)?.scale(bs.mu().conj());
            let d = lhs.distance(&rhs)?;
            Ok((d < 1e-12, format!("residual {d:.1e}")))
        }),
        check("perp mode stays empty", || {
            let psi = test_state()?;
            let split = apply_beamsplitter(&psi.embed(1), 0, 1, &bs)?.value;
            let (lowered, _) = exact_annihilation(&split, 1)?;
            let back = apply_beamsplitter(&lowered, 0, 1, &bs.inverse())?.value;
            let perp: f64 = back.mode_populations(1)?.iter().skip(1).sum();
            Ok((perp < 1e-12, format!("population {perp:.1e}")))
        }),
        check("mean photons at a distance", || {
            let before = bob_mean_photons_simulated(2, 0.5, false)?;
            let after = bob_mean_photons_simulated(2, 0.5, true)?;
            Ok((
                (before - 1.0).abs() < 1e-12 && (after - 0.5).abs() < 1e-12,
                format!("{before:.6} -> {after:.6}"),
            ))
        }),
        check("no shadow", || {
            let r = shadow_demo(&gaussian_profile(4, 1.2), &[1, 2], ShadowMechanism::Annihilation, 2)?;
            Ok((r.contrast < 1e-12, format!("contrast {:.1e}", r.contrast)))
        }),
        check("absorption shadow", || {
            let r = shadow_demo(
                &gaussian_profile(4, 1.2),
                &[1, 2],
                ShadowMechanism::Attenuation { gamma: 0.5 },
                2,
            )?;
            let gap = r.uncovered_ratio - r.covered_ratio;
            Ok((gap > 0.1, format!("ratio gap {gap:.3}")))
        }),
        check("creation counterexample", || {
            let one = PureState::fock(ModeSet::single(3)?, &[1])?;
            let split = apply_beamsplitter(&one.embed(1), 0, 1, &BeamSplitter::balanced())?.value;
            let (raised, _) = split.apply_creation(0)?.value.normalize()?;
            let back = apply_beamsplitter(&raised, 0, 1, &BeamSplitter::balanced().inverse())?.value;
            let rho = MixedState::from(&back).partial_trace(&[0])?;
            let f = fidelity(&rho, &MixedState::fock(ModeSet::single(3)?, &[2])?)?;
            Ok(((f - 2.0 / 3.0).abs() < 1e-12, format!("fidelity {f:.12}")))
        }),
        check("click povm completeness", || {
            let povm = click_povm(&DetectorModel::new(0.6, 0.01)?, 6);
            let worst = (0..6)
                .map(|n| (povm.click[n] + povm.no_click[n] - 1.0).abs())
                .fold(0.0, f64::max);
            Ok((worst < 1e-12, format!("max defect {worst:.1e}")))
        }),
        check("unconditional map preserves trace", || {
            let rho = MixedState::from(&apply_beamsplitter(&test_state()?.embed(1), 0, 1, &bs)?.value);
            let out = unconditional_map(&rho, 0, 0.06, &DetectorModel::new(0.6, 0.01)?)?;
            let drift = (out.trace() - 1.0).abs();
            Ok((drift < 1e-12, format!("trace drift {drift:.1e}")))
        }),
        check("loss composes", || {
            let rho = MixedState::from(&test_state()?);
            let ch = |g| AttenuationChannel::new(g);
            let twice = attenuate(&attenuate(&rho, 0, &ch(0.3)?)?, 0, &ch(0.5)?)?;
            let once = attenuate(&rho, 0, &ch(0.65)?)?;
            let d = twice.max_abs_diff(&once)?;
            Ok((d < 1e-10, format!("max difference {d:.1e}")))
        }),
    ]
}

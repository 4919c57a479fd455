use mlmc_ddp::fem::QoiKind;
use mlmc_ddp::stochastic::{DeviceModel, DeviceSampler};

/// Event whose depletion region cuts the carrier-rich interior off from the
/// back gate; the equilibrated continuity matrix is then nearly singular.
const ISOLATED_INTERIOR: u64 = 13695979276600641191;

#[test]
fn nearly_singular_continuity_system_still_solves() {
    let sampler = DeviceSampler::new(DeviceModel { qoi: QoiKind::SurfaceField, ..Default::default() }).unwrap();
    let fine = sampler.solve(0.625, ISOLATED_INTERIOR).unwrap();
    assert!(fine.qoi.is_finite());
    assert_eq!(fine.violations, 0);
    let coarse = sampler.solve(1.25, ISOLATED_INTERIOR).unwrap();
    assert!((fine.qoi - coarse.qoi).abs() <= 0.1 * coarse.qoi.abs().max(1e-12), "{} vs {}", fine.qoi, coarse.qoi);
}

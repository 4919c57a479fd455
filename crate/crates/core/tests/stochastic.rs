use mlmc_ddp::estimators::mc_estimate;
use mlmc_ddp::fem::{PhysicalParams, QoiKind};
use mlmc_ddp::mesh::{DeviceGeometry, Subdomain};
use mlmc_ddp::stochastic::{
    coupled_solve, dopant_count, draw_dopants, realize_fields, sample_seed, write_samples_csv, CoupledSample,
    DeviceModel, DeviceSampler, DopantModel, DopantSample, Level,
};

#[test]
fn default_concentration_gives_six_hundred_dopants() {
    let g = DeviceGeometry::default();
    // 3000 nm² cross-section, 400 nm deep.
    assert_eq!(dopant_count(5e17, g.width * g.si_thickness, 400.0), 600);
}

#[test]
fn dopant_positions_are_uniform_over_silicon() {
    let g = DeviceGeometry::default();
    let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
    for i in 0..10_000 {
        let s = draw_dopants(sample_seed(4, 0, i), &g, 2e17, 60.0, -1.0).unwrap();
        for p in &s.positions {
            sx += p[0];
            sy += p[1];
            n += 1;
        }
    }
    let (mx, my) = (sx / n as f64, sy / n as f64);
    // Uniform on [0, 60] × [0, 50]: standard deviations 60/√12 and 50/√12.
    let se_x = 60.0 / 12f64.sqrt() / (n as f64).sqrt();
    let se_y = 50.0 / 12f64.sqrt() / (n as f64).sqrt();
    assert!((mx - 30.0).abs() < 3.0 * se_x, "mean x {mx}");
    assert!((my - 25.0).abs() < 3.0 * se_y, "mean y {my}");
}

#[test]
fn single_dopant_marks_exactly_the_elements_within_its_radius() {
    let model = DeviceModel { dopants: DopantModel { r_dop: 3.0, ..Default::default() }, ..Default::default() };
    let level = Level::new(&model, 1.25).unwrap();
    let mesh = level.disc.mesh();
    let home = (0..mesh.num_triangles())
        .find(|&k| {
            mesh.subdomains()[k] == Subdomain::Silicon
                && (mesh.centroid(k)[0] - 30.0).abs() < 1.0
                && (mesh.centroid(k)[1] - 25.0).abs() < 1.0
        })
        .unwrap();
    let c = mesh.centroid(home);
    let sample = DopantSample { seed: 0, positions: vec![c], charge_sign: vec![-1.0], count: 1, empty: false };
    let p = &model.physics;
    let f = realize_fields(&sample, &level.disc, p, &model.dopants).unwrap();
    let expected: Vec<usize> = (0..mesh.num_triangles())
        .filter(|&k| {
            let q = mesh.centroid(k);
            mesh.subdomains()[k] == Subdomain::Silicon && (q[0] - c[0]).hypot(q[1] - c[1]) <= 3.0
        })
        .collect();
    let marked: Vec<usize> = (0..mesh.num_triangles()).filter(|&k| f.permittivity[k] == p.a_dop).collect();
    assert_eq!(marked, expected);
    assert!(marked.len() > 10);
}

#[test]
fn identical_levels_give_identical_qoi() {
    let model = DeviceModel::default();
    let level = Level::new(&model, 5.0).unwrap();
    let sample = model.draw(sample_seed(2, 0, 0)).unwrap();
    let coupled = CoupledSample { sample, fine_level: 0, coarse_level: 0 };
    let (f, c) = coupled_solve(&coupled, &level, &level, &model).unwrap();
    assert_eq!(f.to_bits(), c.to_bits());
}

#[test]
fn level_differences_shrink_under_refinement() {
    let model = DeviceModel { qoi: QoiKind::SurfaceField, ..Default::default() };
    let levels: Vec<Level> = [5.0, 2.5, 1.25].iter().map(|&h| Level::new(&model, h).unwrap()).collect();
    let (mut d10, mut d21) = (0.0, 0.0);
    for i in 0..6 {
        let sample = model.draw(sample_seed(3, 0, i)).unwrap();
        let q: Vec<f64> = levels
            .iter()
            .map(|l| {
                let f = l.solve(&model, &sample).unwrap();
                l.qoi(&model, &f, sample.seed).unwrap()
            })
            .collect();
        d10 += (q[1] - q[0]).abs();
        d21 += (q[2] - q[1]).abs();
    }
    assert!(d21 < d10, "mean |Q2 - Q1| = {} vs mean |Q1 - Q0| = {}", d21 / 6.0, d10 / 6.0);
}

#[test]
fn qoi_does_not_depend_on_the_thread_count() {
    let sampler = DeviceSampler::new(DeviceModel::default()).unwrap();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| mc_estimate(&sampler, 5.0, 6, 21).unwrap())
    };
    let (a, b) = (run(1), run(3));
    assert_eq!(a.values, b.values);
    assert_eq!(a.mean.to_bits(), b.mean.to_bits());
}

#[test]
fn charge_is_level_independent_for_random_events() {
    let model = DeviceModel::default();
    let p = PhysicalParams::default();
    let sample = model.draw(sample_seed(8, 0, 3)).unwrap();
    let totals: Vec<f64> = [5.0, 2.5, 1.25]
        .iter()
        .map(|&h| {
            let l = Level::new(&model, h).unwrap();
            realize_fields(&sample, &l.disc, &p, &model.dopants).unwrap().doping_load.iter().sum()
        })
        .collect();
    for t in &totals[1..] {
        assert!((t - totals[0]).abs() <= 1e-6 * totals[0].abs());
    }
}

#[test]
fn sample_dump_has_one_row_per_dopant() {
    let model = DeviceModel::default();
    let s = vec![model.draw(1).unwrap(), model.draw(2).unwrap()];
    let mut out = Vec::new();
    write_samples_csv(&s, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert!(text.starts_with("seed,index,x,y,sign\n"));
    assert_eq!(text.lines().count(), 1 + s[0].count + s[1].count);
}

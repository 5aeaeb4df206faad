use neurocal_core::distances::PointCloud;
use neurocal_core::exec::Sequential;
use neurocal_core::sensitivity::{model_expectation, run_sa, Ishigami, ParamSpace, SeedScheme};
use neurocal_core::simulator::{Simulator, ToyGaussian};
use neurocal_core::Result;

/// `y = Σ c_i x_i` on the unit cube; `S1_i = S_tot_i = c_i² / Σ c_j²`.
struct Additive(Vec<f64>);

impl Simulator for Additive {
    fn dim_theta(&self) -> usize {
        self.0.len()
    }

    fn qoi_labels(&self) -> Vec<String> {
        vec!["y".into(), "scaled".into()]
    }

    fn simulate(&self, theta: &[f64], n: usize, _: u64) -> Result<PointCloud> {
        let y: f64 = self.0.iter().zip(theta).map(|(c, x)| c * x).sum();
        PointCloud::new(2, [y, 40.0 * y - 7.0].repeat(n))
    }
}

#[test]
fn ishigami_first_order_at_4096() {
    let is = Ishigami::default();
    let sa = run_sa(
        &is,
        &Ishigami::space(),
        4096,
        1,
        0,
        SeedScheme::PerBaseIndex,
        &Sequential,
    )
    .unwrap();
    for (i, exact) in is.first_order().iter().enumerate() {
        let e = sa.result.get(&format!("x{}", i + 1), "Y").unwrap();
        assert!(
            (e.s1.unwrap() - exact).abs() < 0.05,
            "x{}: {:?} vs {exact}",
            i + 1,
            e.s1
        );
    }
}

#[test]
fn additive_model_and_column_rescaling() {
    let c = vec![1.0, 2.0, 3.0];
    let total: f64 = c.iter().map(|v| v * v).sum();
    let sa = run_sa(
        &Additive(c.clone()),
        &ParamSpace::unit(3),
        1024,
        1,
        0,
        SeedScheme::PerRow,
        &Sequential,
    )
    .unwrap();
    for (i, ci) in c.iter().enumerate() {
        let name = format!("x{}", i + 1);
        let y = sa.result.get(&name, "y").unwrap();
        let z = sa.result.get(&name, "scaled").unwrap();
        let exact = ci * ci / total;
        assert!((y.s1.unwrap() - exact).abs() < 0.03);
        assert!((y.s_tot.unwrap() - exact).abs() < 0.03);
        assert!((y.s1.unwrap() - z.s1.unwrap()).abs() < 1e-9);
        assert!((y.s_tot.unwrap() - z.s_tot.unwrap()).abs() < 1e-9);
    }
}

#[test]
fn small_toy_run_is_reproducible() {
    let toy = ToyGaussian::new(3).unwrap();
    let space = ParamSpace::unit(3);
    let a = run_sa(&toy, &space, 4, 1, 5, SeedScheme::PerRow, &Sequential).unwrap();
    let b = run_sa(&toy, &space, 4, 1, 5, SeedScheme::PerRow, &Sequential).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.outputs.len() * a.qoi_labels.len(), 32 * 3);
}

#[test]
fn expectation_averages_replicates() {
    let toy = ToyGaussian::new(2).unwrap();
    let e = model_expectation(&toy, &[3.0, -1.0], 20_000, 8).unwrap();
    assert!(
        (e[0] - 3.0).abs() < 0.05 && (e[1] + 1.0).abs() < 0.05,
        "{e:?}"
    );
    assert_eq!(e, model_expectation(&toy, &[3.0, -1.0], 20_000, 8).unwrap());
}

use mlm_bench::report::COLUMNS;
use mlm_bench::{render_report, ComparisonRow, Format, Solver};

fn rows() -> Vec<ComparisonRow> {
    let base = ComparisonRow {
        campaign: "golden".into(),
        problem: "poisson1d".into(),
        nu: 5.0,
        hidden: 64,
        activation: "tanh".into(),
        solver: Solver::Lm,
        seeds: 2,
        converged: 2,
        failed: 0,
        mean_iterations: 90.5,
        mean_coarse_hidden: None,
        rmse_geomean: 3.1622776601683794e-4,
        rmse_per_seed: vec![1e-4, 1e-3],
        save_min: None,
        save_mean: None,
        save_max: None,
    };
    let mlm = ComparisonRow {
        solver: Solver::Mlm,
        converged: 1,
        failed: 1,
        mean_iterations: 120.0,
        mean_coarse_hidden: Some(35.0),
        rmse_per_seed: vec![2.5e-4],
        rmse_geomean: 2.5e-4,
        save_min: Some(0.5),
        save_mean: Some(1.0 / 3.0),
        save_max: Some(f64::NAN),
        ..base.clone()
    };
    vec![base, mlm]
}

#[test]
fn csv_golden() {
    let csv = String::from_utf8(render_report(&rows(), Format::Csv).unwrap()).unwrap();
    let expected = "\
campaign,problem,nu,hidden,activation,solver,seeds,converged,failed,mean_iterations,mean_coarse_hidden,rmse_geomean,rmse_per_seed,save_min,save_mean,save_max
golden,poisson1d,5.00000e0,64,tanh,lm,2,2,0,9.05000e1,,3.16228e-4,1.00000e-4;1.00000e-3,,,
golden,poisson1d,5.00000e0,64,tanh,mlm,2,1,1,1.20000e2,3.50000e1,2.50000e-4,2.50000e-4,5.00000e-1,3.33333e-1,NaN
";
    assert_eq!(csv, expected);
    assert_eq!(csv.lines().next().unwrap().split(',').collect::<Vec<_>>(), COLUMNS);
}

#[test]
fn json_carries_the_same_fields() {
    let bytes = render_report(&rows(), Format::Json).unwrap();
    assert_eq!(bytes.last(), Some(&b'\n'));
    let value: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
    let list = value.as_array().unwrap();
    assert_eq!(list.len(), 2);
    for row in list {
        let keys: Vec<&str> = row.as_object().unwrap().keys().map(String::as_str).collect();
        let mut want = COLUMNS.to_vec();
        let mut got = keys.clone();
        want.sort();
        got.sort();
        assert_eq!(got, want);
    }
    assert_eq!(list[0]["save_mean"], serde_json::Value::Null);
    assert_eq!(list[1]["save_mean"].as_f64(), Some(0.333333));
    assert_eq!(list[1]["save_max"], serde_json::Value::Null);
    assert_eq!(list[0]["rmse_geomean"].as_f64(), Some(3.16228e-4));
    assert_eq!(list[0]["rmse_per_seed"], serde_json::json!([1e-4, 1e-3]));
    assert_eq!(list[1]["solver"], "mlm");
}

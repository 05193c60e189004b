use rdars_core::campaign::{emit_csv, run_campaign, summarize, Algorithm, Campaign, CsvOptions, Sweep, TrialStatus};
use rdars_core::validation::reference_scenario;

fn mean_rate(table: &rdars_core::campaign::ResultTable, algo: Algorithm) -> f64 {
    let rows: Vec<f64> = table.records.iter().filter(|r| r.algorithm == algo).map(|r| r.sum_rate).collect();
    rows.iter().sum::<f64>() / rows.len() as f64
}

#[test]
fn wa_matches_closed_form_for_one_ue() {
    let c = Campaign::new(reference_scenario(16, 64, 8, 1), 1, 3, vec![Algorithm::WaOptEta, Algorithm::SingleUeClosed]);
    let table = run_campaign(&c).unwrap();
    let wa = &table.cell(30.0, Algorithm::WaOptEta)[0];
    let closed = &table.cell(30.0, Algorithm::SingleUeClosed)[0];
    assert_eq!(closed.status, TrialStatus::Ok);
    assert!((wa.sum_rate - closed.sum_rate).abs() <= 1e-3 * closed.sum_rate);
}

#[test]
fn baselines_are_ordered() {
    let c = Campaign::new(
        reference_scenario(4, 24, 4, 3),
        100,
        11,
        vec![Algorithm::ExhaustiveEta, Algorithm::CompactEta1, Algorithm::RandomEta],
    );
    let table = run_campaign(&c).unwrap();
    assert!(table.records.iter().all(|r| r.succeeded()));
    let ex = table.cell(30.0, Algorithm::ExhaustiveEta);
    let compact = table.cell(30.0, Algorithm::CompactEta1);
    for (e, k) in ex.iter().zip(&compact) {
        assert_eq!(e.trial, k.trial);
        assert!(e.sum_rate >= k.sum_rate);
    }
    let (m_ex, m_rand, m_compact) = (
        mean_rate(&table, Algorithm::ExhaustiveEta),
        mean_rate(&table, Algorithm::RandomEta),
        mean_rate(&table, Algorithm::CompactEta1),
    );
    assert!(m_compact <= m_rand && m_rand <= m_ex, "{m_compact} {m_rand} {m_ex}");
}

#[test]
fn wa_and_exhaustive_coincide() {
    let c = Campaign::new(reference_scenario(4, 16, 4, 2), 5, 2, vec![Algorithm::WaOptEta, Algorithm::ExhaustiveEta]);
    let table = run_campaign(&c).unwrap();
    for (a, b) in table.cell(30.0, Algorithm::WaOptEta).iter().zip(table.cell(30.0, Algorithm::ExhaustiveEta)) {
        assert_eq!(a.sum_rate, b.sum_rate);
        assert_eq!(a.eta, b.eta);
    }
}

#[test]
fn csv_round_trip_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = Campaign::new(reference_scenario(4, 16, 4, 2), 3, 77, vec![Algorithm::WaOptEta, Algorithm::RandomEta]);
    c.sweep = Some(Sweep::parse("ptot_dbm=10:20:5").unwrap());
    let quiet = CsvOptions { wall_time: false };
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    emit_csv(&run_campaign(&c).unwrap(), &a, quiet).unwrap();
    c.parallel = false;
    emit_csv(&run_campaign(&c).unwrap(), &b, quiet).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let mut reader = csv::Reader::from_path(&a).unwrap();
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, ["trial", "sweep_value", "algorithm", "eta", "sum_rate_bits", "min_ue_rate", "iters", "wall_ms", "status"]);
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 3 * 3 * 2);
    assert_eq!(&rows[0][0], "0");
    assert_eq!(&rows[0][1], "10");
    assert_eq!(&rows[0][2], "RANDOM_ETA");
    for r in &rows {
        let rate: f64 = r[4].parse().unwrap();
        assert!(rate > 0.0);
        assert!(r[4].trim_start_matches('-').replace('.', "").trim_start_matches('0').len() <= 9);
        assert_eq!(&r[7], "");
    }
}

#[test]
fn one_row_file_has_two_lines() {
    let dir = tempfile::tempdir().unwrap();
    let c = Campaign::new(reference_scenario(2, 8, 2, 1), 1, 1, vec![Algorithm::CompactEta1]);
    let path = dir.path().join("one.csv");
    emit_csv(&run_campaign(&c).unwrap(), &path, CsvOptions::default()).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(!text.lines().nth(1).unwrap().split(',').nth(7).unwrap().is_empty());
}

#[test]
fn unwritable_path_reports_it() {
    let c = Campaign::new(reference_scenario(2, 8, 2, 1), 1, 1, vec![Algorithm::CompactEta1]);
    let table = run_campaign(&c).unwrap();
    let err = emit_csv(&table, std::path::Path::new("/nonexistent-dir/x.csv"), CsvOptions::default()).unwrap_err();
    assert!(err.to_string().contains("/nonexistent-dir/x.csv"));
}

#[test]
fn summary_counts_cells() {
    let mut c = Campaign::new(reference_scenario(2, 8, 2, 2), 4, 9, vec![Algorithm::CompactEta1, Algorithm::TwoUeProp1]);
    c.sweep = Some(Sweep::parse("ptot_dbm=0:10:10").unwrap());
    let table = run_campaign(&c).unwrap();
    let s = summarize(&table);
    assert_eq!(s.len(), 4);
    for cell in &s {
        assert_eq!(cell.n_ok + cell.n_failed, 4);
        assert!(cell.std_sum_rate >= 0.0);
    }
    assert!(s[0].sweep_value < s[3].sweep_value);
}

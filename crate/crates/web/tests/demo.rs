use fracture_web::Demo;

#[test]
fn sample_is_seeded() {
    let mut a = Demo::new(16).unwrap();
    let mut b = Demo::new(16).unwrap();
    let fa = a.sample(7, 2, 4).unwrap();
    assert_eq!(fa, b.sample(7, 2, 4).unwrap());
    assert_eq!(fa.len(), 16 * 16);
    assert!(fa.iter().any(|&v| v == 1.0));
    assert!(fa.iter().all(|&v| v == 0.0 || v == 1.0));
    assert!((4..=8).contains(&a.fracture_count()));
    assert_ne!(fa, a.sample(8, 2, 4).unwrap());
}

#[test]
fn rule_growth_is_monotone_and_stops() {
    let mut d = Demo::new(16).unwrap();
    let mut prev = d.sample(3, 1, 2).unwrap();
    d.set_mode("T-horizontal").unwrap();
    let mut steps = 0;
    while d.rule_running() {
        let next = d.rule_step();
        assert!(prev.iter().zip(&next).all(|(p, n)| n >= p));
        prev = next;
        steps += 1;
        assert!(steps <= 64, "growth never stopped");
    }
    assert_eq!(d.rule_steps(), steps);
    // stepping a finished run changes nothing
    assert_eq!(d.rule_step(), prev);
}

#[test]
fn bad_inputs_are_errors() {
    let mut d = Demo::new(8).unwrap();
    assert!(d.set_mode("Q-sideways").is_err());
    assert!(d.pf_step(1).is_err());
    assert!(d.pf_start("unobtainium").unwrap_err().contains("unobtainium"));
    assert!(Demo::new(0).is_err());
}

#[test]
fn phasefield_steps_and_damage_is_bounded() {
    let mut d = Demo::new(12).unwrap();
    d.sample(1, 1, 1).unwrap();
    let start = d.pf_start("pbx").unwrap();
    assert_eq!(start.len(), 144);
    let later = d.pf_step(20).unwrap();
    assert!(d.pf_steps() <= 20 && d.pf_steps() > 0);
    assert!(d.pf_time_us() > 0.0);
    assert!(later.iter().all(|&v| (0.0..=1.0).contains(&v)));
    assert!(later.iter().cloned().fold(0.0f32, f32::max) > 0.5);
    assert!(d.materials().iter().any(|m| m == "pbx"));
}

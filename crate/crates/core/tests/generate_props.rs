use episode_rank::dataset::{load_sequences, save_dataset};
use episode_rank::generate::{generate, GeneratorConfig, GeneratorKind};
use episode_rank::machine::Machine;
use episode_rank::Episode;

#[test]
fn default_corpora_have_the_expected_size() {
    for kind in [GeneratorKind::Plant, GeneratorKind::Plant2, GeneratorKind::Gap] {
        let g = generate(&GeneratorConfig::defaults(kind, 0)).unwrap();
        let events = g.dataset.num_events() as f64;
        assert_eq!(g.dataset.len(), 10_000);
        assert!((events / 250_000.0 - 1.0).abs() <= 0.01, "{kind}: {events}");
        assert!(g.dataset.alphabet().len() <= 1000);
    }
}

#[test]
fn gapless_plants_are_supported_by_the_sequences_holding_them() {
    let plant = generate(&GeneratorConfig::plant(5)).unwrap();
    let mut a = plant.dataset.alphabet().clone();
    let episodes = [
        Episode::serial(&mut a, &["a", "b", "c", "d"]),
        Episode::serial(&mut a, &["e", "f"]),
        Episode::from_symbols(&mut a, &["k", "m", "n", "l"], &[(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap(),
    ];
    assert_eq!(plant.placed, vec![200, 20, 10]);
    for (ep, &n) in episodes.iter().zip(&plant.sequences_with_plant) {
        assert_eq!(Machine::build(ep).unwrap().support(&plant.dataset), n);
    }

    let plant2 = generate(&GeneratorConfig::plant2(5)).unwrap();
    let mut a = plant2.dataset.alphabet().clone();
    for (syms, &n) in [["a", "b", "c"], ["d", "e", "f"]].iter().zip(&plant2.sequences_with_plant) {
        let ep = Episode::serial(&mut a, syms);
        assert_eq!(Machine::build(&ep).unwrap().support(&plant2.dataset), n);
    }
}

#[test]
fn seeds_pin_the_stream() {
    let mut cfg = GeneratorConfig::gap(42, 0.3);
    cfg.num_sequences = 3;
    cfg.plants[0].count = 2;
    let text = generate(&cfg).unwrap().dataset.to_text();
    // ChaCha8 stream for seed 42; changes only if the generator changes
    let first: Vec<&str> = text.lines().next().unwrap().split(' ').take(5).collect();
    assert_eq!(first, GOLDEN_FIRST_EVENTS);
    assert_eq!(text, generate(&cfg).unwrap().dataset.to_text());
}

const GOLDEN_FIRST_EVENTS: [&str; 5] = ["x946", "x425", "x624", "x287", "x149"];

#[test]
fn saved_corpora_reload_identically() {
    let mut cfg = GeneratorConfig::plant(9);
    cfg.num_sequences = 200;
    let g = generate(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("plant.txt");
    save_dataset(&g.dataset, &path).unwrap();
    let back = load_sequences(&path).unwrap();
    assert_eq!(back, g.dataset);
}

use repkit::decomposition::{find_intertwiner, isotypic_decompose, Verdict};
use repkit::numerics::{kron, partial_trace};
use repkit::qml::{train, Dataset, QmlModel, TaskKind, TaskSpec, TrainConfig};
use repkit::random::{random_density_matrix, rng};
use repkit::representations::{dual, perm_rep_qubits, su2_fundamental, tensor_power, RepDocument, Representation};
use repkit::Tolerance;

#[test]
fn rep_documents_survive_a_round_trip() {
    let tol = Tolerance::default();
    let r = tensor_power(&su2_fundamental(), 2).unwrap();
    for doc in [RepDocument::plain(&r), RepDocument::adjoint(&r)] {
        let text = serde_json::to_string(&doc).unwrap();
        let back: RepDocument = serde_json::from_str(&text).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), text);
        let file = back.load(&tol).unwrap();
        assert_eq!(file.base().dim(), 4);
    }
}

#[test]
fn decomposition_of_three_qubits_is_seed_independent() {
    let tol = Tolerance::default();
    let r = perm_rep_qubits(3).unwrap();
    let mut seen = Vec::new();
    for seed in 0..4 {
        let dec = isotypic_decompose(&r, seed, &tol).unwrap();
        seen.push(dec.sorted_blocks());
        for g in r.all_representatives() {
            assert!(dec.off_block_residual(&g) < 1e-9);
        }
    }
    assert!(seen.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn su2_is_self_dual() {
    let tol = Tolerance::default();
    let f: Representation = su2_fundamental();
    let phi = find_intertwiner(&f, &dual(&f), &tol).unwrap();
    assert_eq!(phi.verdict, Verdict::Equivalent);
}

#[test]
fn dataset_dump_reloads_and_scores_identically() {
    let tol = Tolerance::default();
    let data = TaskSpec::new(TaskKind::Ferro, 40, 3).generate().unwrap();
    let back = Dataset::from_json(&data.to_json().unwrap()).unwrap();
    let model = QmlModel::for_task(TaskKind::Ferro, 1, 2, &tol).unwrap();
    let trained = train(&model, &data, &TrainConfig { epochs: 5, ..TrainConfig::default() }).unwrap().model;
    assert_eq!(trained.accuracy(&data).unwrap(), trained.accuracy(&back).unwrap());
}

#[test]
fn pooled_model_on_one_qubit_matches_the_two_qubit_model() {
    // measuring M⊗1 after W equals measuring M on the traced-out first qubit
    let tol = Tolerance::default();
    let m = QmlModel::for_task(TaskKind::Swap2d, 1, 5, &tol).unwrap();
    let w = m.circuit.unitary(&m.generators).unwrap();
    let z = repkit::numerics::pauli_z();
    let probe = kron(&z, &repkit::numerics::identity(2));
    let mut r = rng(8);
    for _ in 0..5 {
        let rho = random_density_matrix(4, &mut r);
        let out = &w * &rho * w.adjoint();
        let full = (&probe * &out).trace().re;
        let reduced = partial_trace(&out, &[2, 2], &[0]).unwrap();
        assert!((full - (&z * reduced).trace().re).abs() < 1e-12);
    }
}

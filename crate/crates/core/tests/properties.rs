use beamsurp_core::beam::{surprisal_per_word, BeamConfig};
use beamsurp_core::fixtures::{garden_path_scorer, garden_path_specs};
use beamsurp_core::scorer::StateSignature;
use beamsurp_core::transition::{oracle, parse_actions, render_actions, replay, replay_tree};
use beamsurp_core::treebank::{labeled_f1, parse_bracketed};
use beamsurp_core::Strategy as Order;
use beamsurp_core::Tree;
use proptest::prelude::*;

fn arb_tree(depth: u32) -> BoxedStrategy<Tree> {
    let label = prop::sample::select(vec!["S", "NP", "VP", "PP", "X", "DT", "NN"]);
    let word = prop::sample::select(vec!["the", "a", "dog", "ran", "of", "café"]);
    let leaf = word.prop_map(|w| Tree::leaf(w).unwrap());
    let unary = (label.clone(), leaf.clone()).prop_map(|(l, c)| Tree::node(l, vec![c]).unwrap());
    if depth <= 1 {
        return unary.boxed();
    }
    let child = prop_oneof![2 => leaf, 3 => arb_tree(depth - 1)];
    prop_oneof![
        1 => unary,
        3 => (label, prop::collection::vec(child, 1..=4)).prop_map(|(l, cs)| Tree::node(l, cs).unwrap()),
    ]
    .boxed()
}

/// Same shape, with one label changed at a node chosen by `pick`.
fn relabel(t: &Tree, pick: &mut usize) -> Tree {
    match t {
        Tree::Leaf(_) => t.clone(),
        Tree::Node(n) => {
            let label = if *pick == 0 { "ZZ" } else { n.label() };
            *pick = pick.wrapping_sub(1);
            let kids = n.children().iter().map(|c| relabel(c, pick)).collect();
            Tree::node(label, kids).unwrap()
        }
    }
}

proptest! {
    #[test]
    fn bracketed_round_trip(t in arb_tree(6)) {
        let text = t.render_bracketed();
        prop_assert_eq!(parse_bracketed(&text).unwrap(), t);
    }

    #[test]
    fn oracle_replays_to_the_same_tree(t in arb_tree(6)) {
        for strategy in Order::ALL {
            let acts = oracle(&t, strategy);
            prop_assert_eq!(&replay_tree(&acts, strategy).unwrap(), &t);
            prop_assert_eq!(parse_actions(&render_actions(&acts)).unwrap(), acts);
        }
    }

    #[test]
    fn f1_of_a_tree_with_itself_is_one(t in arb_tree(6)) {
        let prf = labeled_f1(&t, &t).unwrap();
        prop_assert_eq!((prf.precision, prf.recall, prf.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn f1_is_symmetric(t in arb_tree(5), pick in 0usize..20) {
        let u = relabel(&t, &mut pick.clone());
        let (a, b) = (labeled_f1(&t, &u).unwrap(), labeled_f1(&u, &t).unwrap());
        prop_assert_eq!(a.f1, b.f1);
        prop_assert_eq!(a.precision, b.recall);
        prop_assert!((0.0..=1.0).contains(&a.f1));
    }

    #[test]
    fn signatures_round_trip_through_text(t in arb_tree(4), cut in 0usize..40, top in 1usize..6, lexical: bool) {
        for strategy in Order::ALL {
            let acts = oracle(&t, strategy);
            let state = replay(&acts[..cut.min(acts.len())], strategy).unwrap();
            let cfg = beamsurp_core::scorer::SignatureConfig { top_entries: top, open_clip: 3, lexical };
            let sig = StateSignature::of(&state, &cfg);
            prop_assert_eq!(sig.to_string().parse::<StateSignature>().unwrap(), sig);
        }
    }
}

#[test]
fn beam_items_replay_to_their_states() {
    for strategy in Order::ALL {
        let scorer = garden_path_scorer(strategy);
        for spec in garden_path_specs() {
            for k in [1, 3, 50] {
                let cfg = BeamConfig::new(k, 20).unwrap();
                let run =
                    surprisal_per_word(&spec.ambiguous_sentence, &scorer, strategy, &cfg).unwrap();
                for beam in &run.snapshots {
                    for item in &beam.items {
                        assert_eq!(replay(&item.actions, strategy).unwrap(), item.state);
                        assert_eq!(item.state.words_generated(), beam.word_index);
                    }
                }
            }
        }
    }
}

//! Heavy randomized cross-checks, kept out of the default run:
//! `cargo test -p allreduce-rate --test stress -- --ignored`.

use allreduce_rate::arborescence::{self, Orientation};
use allreduce_rate::edmonds::min_cost_arborescence;
use allreduce_rate::network::{EdgeMap, Network};
use allreduce_rate::rng::SplitMix64;
use allreduce_rate::{cut, lp, BigRational};
use num::BigInt;

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn random_network(rng: &mut SplitMix64, k: usize, max_beta: u64, density: u64) -> Network {
    let mut edges = Vec::new();
    for i in 0..k {
        for j in 0..k {
            if i != j && rng.next_below(100) < density {
                let b = 1 + rng.next_below(max_beta);
                edges.push((i, j, b));
            }
        }
    }
    Network::from_edge_list(k, &edges).unwrap()
}

#[test]
#[ignore = "heavy randomized cross-check"]
fn lp_paths_agree_on_four_hundred_random_networks() {
    let mut rng = SplitMix64::new(0x57e55);

    let mut rng = SplitMix64::new(0x57e55);
    // LP oracle equivalence across sizes and densities.
    let mut lp_checked = 0;
    while lp_checked < 400 {
        let k = 3 + rng.next_below(3) as usize;
        let density = 40 + rng.next_below(60);
        let n = random_network(&mut rng, k, 4, density);
        if !n.is_strongly_connected() {
            continue;
        }
        let ex = lp::lp_exhaustive(&n).unwrap();
        let cg = lp::lp_colgen(&n).unwrap();
        assert_eq!(ex.value, cg.value, "LP mismatch:\n{}", n.to_file_string());
        // Both sides against the packing cap and the cut bound.
        assert!(ex.value <= lp::packing_cap(&n));
        let cut = cut::cutset_bound_bruteforce(&n).unwrap();
        let cut_rat = BigRational::from_integer(BigInt::from(cut.value().clone()));
        assert!(ex.value <= cut_rat);
        lp_checked += 1;
    }
    println!("LP exhaustive == colgen on {lp_checked} random networks");
}

#[test]
#[ignore = "heavy randomized cross-check"]
fn edmonds_matches_enumeration_under_tie_heavy_costs() {
    let mut rng = SplitMix64::new(0xed5e55);
    // Edmonds against enumeration with adversarial rational costs
    // (many exact ties to stress deterministic tie-breaking, negative
    // adjusted costs via contractions).
    let mut edmonds_checked = 0;
    while edmonds_checked < 3000 {
        let k = 2 + rng.next_below(4) as usize;
        let density = 35 + rng.next_below(65);
        let n = random_network(&mut rng, k, 1, density);
        let costs: EdgeMap<BigRational> = n
            .edges()
            .map(|(f, t, _)| {
                // Coarse grid of values so ties are common.
                let num = rng.next_below(4) as i64;
                let den = 1 + rng.next_below(2) as i64;
                ((f, t), rat(num, den))
            })
            .collect();
        for root in n.nodes() {
            for orientation in [Orientation::In, Orientation::Out] {
                let all = arborescence::enumerate(&n, root, orientation);
                match min_cost_arborescence(&n, root, orientation, &costs) {
                    Err(_) => assert!(all.is_empty()),
                    Ok((tree, cost)) => {
                        let recomputed: BigRational = tree.edges().map(|e| costs[&e].clone()).sum();
                        assert_eq!(cost, recomputed);
                        let best = all
                            .iter()
                            .map(|t| t.edges().map(|e| costs[&e].clone()).sum::<BigRational>())
                            .min()
                            .unwrap();
                        assert_eq!(cost, best, "root {root}:\n{}", n.to_file_string());
                        // Determinism: rerun returns the identical tree.
                        let (tree2, _) =
                            min_cost_arborescence(&n, root, orientation, &costs).unwrap();
                        assert_eq!(tree, tree2);
                    }
                }
                edmonds_checked += 1;
            }
        }
    }
    println!("Edmonds == enumeration on {edmonds_checked} (network, root, orientation) cases");
}

#[test]
#[ignore = "heavy randomized cross-check"]
fn colgen_stays_consistent_on_larger_networks() {
    let mut rng = SplitMix64::new(0xb165e55);
    // Larger-K colgen sanity against cap and cut on denser networks.
    let mut big = 0;
    while big < 40 {
        let k = 6 + rng.next_below(3) as usize;
        let n = random_network(&mut rng, k, 3, 60);
        if !n.is_strongly_connected() {
            continue;
        }
        let sol = lp::lp_colgen(&n).unwrap();
        sol.primal.check_feasible(&n).unwrap();
        assert_eq!(sol.primal.rate(), sol.value);
        assert!(sol.value <= lp::packing_cap(&n));
        let cut = cut::cutset_bound_bruteforce(&n).unwrap();
        assert!(sol.value <= BigRational::from_integer(BigInt::from(cut.value().clone())));
        // Weak duality on the returned duals.
        let yb: BigRational = sol
            .duals
            .iter()
            .map(|(&(f, t), y)| y * BigRational::from_integer(BigInt::from(n.beta(f, t).clone())))
            .sum();
        assert_eq!(yb, sol.value);
        big += 1;
    }
    println!("colgen feasible, capped, dual-consistent on {big} K in 6..=8 networks");
}

//! Searches the shortest confinement scripts that close the escape branch of
//! the five-round strategy (k = l = 2, level v).

use queuelay_games::strategy::FiveRoundStrategy;
use queuelay_games::verify::{verify_alice_wins, Verdict};
use queuelay_games::GameConfig;

/// Edges of the local 2-tree grown by `script` from the edge 0-1.
fn local_edges(script: &[[usize; 2]]) -> Vec<[usize; 2]> {
    let mut edges = vec![[0, 1]];
    for (i, &[a, b]) in script.iter().enumerate() {
        let x = i + 2;
        edges.push([a, x]);
        edges.push([b, x]);
    }
    edges
}

fn main() {
    let cfg = GameConfig::new(2, 2, 5).expect("valid config");
    let mut frontier: Vec<Vec<[usize; 2]>> = vec![Vec::new()];
    for len in 1..=4 {
        let mut next = Vec::new();
        let mut wins = 0;
        for script in &frontier {
            for e in local_edges(script) {
                let mut longer = script.clone();
                longer.push(e);
                match verify_alice_wins(&FiveRoundStrategy::with_confinement(longer.clone()), &cfg) {
                    Ok(Verdict::Win(tree)) => {
                        wins += 1;
                        println!("{longer:?}: win, {} leaves", tree.leaf_count());
                    }
                    Ok(_) => next.push(longer),
                    Err(e) => eprintln!("{longer:?}: {e}"),
                }
            }
        }
        println!("length {len}: {wins} winning scripts");
        if wins > 0 {
            break;
        }
        frontier = next;
    }
}

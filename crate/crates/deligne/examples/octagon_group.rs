//! Prints the `[group]` table of the genus-2 octagon scenario.

use deligne::group_cohomology::{octagon_group, octagon_vertices_h, OCTAGON_RELATOR};

fn main() {
    let (group, oct) = octagon_group().expect("octagon group");
    println!("[group]");
    let names: Vec<String> = group.names.iter().map(|n| format!("\"{n}\"")).collect();
    println!("names = [{}]", names.join(", "));
    println!("relator = \"{OCTAGON_RELATOR}\"");
    println!("generators = [");
    for g in &group.generators {
        let m = g.0;
        println!("  [[{:?}, {:?}], [{:?}, {:?}]],", m[0][0], m[0][1], m[1][0], m[1][1]);
    }
    println!("]");
    println!("vertices = [");
    for v in octagon_vertices_h(&oct) {
        println!("  [{:?}, {:?}],", v.re, v.im);
    }
    println!("]");
}

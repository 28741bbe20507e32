use std::time::Instant;

use skelram::curve::CurveClass;
use skelram::generator::{enumerate_small, EnumLimits};
use skelram::ramification::check_all;

fn main() {
    let t = Instant::now();
    let limits = EnumLimits::all_classes(2, 3, 3);
    let mut count = 0usize;
    let mut violations = 0usize;
    let mut by_class = std::collections::BTreeMap::new();
    for m in enumerate_small(&limits) {
        count += 1;
        *by_class.entry(m.source().class()).or_insert(0usize) += 1;
        for b in check_all(&m).unwrap() {
            if !b.holds {
                violations += 1;
            }
        }
    }
    println!("full sweep: {count} instances, {violations} violations in {:?}", t.elapsed());
    println!("by class: {by_class:?}");

    let affinoid = EnumLimits::new(2, 1, 2, [CurveClass::Affinoid]);
    println!("affinoid(2,1,2): {}", enumerate_small(&affinoid).count());

    let small = EnumLimits::all_classes(1, 1, 2);
    println!("all(1,1,2): {}", enumerate_small(&small).count());
}

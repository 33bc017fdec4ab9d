use std::sync::Arc;

use uniset::constructions::{Anchors, FamilySpec, Kind};
use num_bigint::BigInt;
use num_rational::BigRational;
use uniset::constructions::n2;
use uniset::counting::theta;
use uniset::covers::{cover_union_structure, covering_number, residual_family};
use uniset::{enumerate_universe, PartialPartition, Params, UniformPartition};

fn n1_at_2_5_1() -> (FamilySpec, Vec<UniformPartition>) {
    let params = Params::new(2, 5).unwrap();
    let u = Arc::new(enumerate_universe(params).unwrap());
    let spec = FamilySpec::canonical(Kind::N1, params, 1).unwrap();
    let members = spec.realize(&u).unwrap().first.members().unwrap();
    (spec, members)
}

#[test]
fn restricted_n1_subfamily_is_covered_by_its_core() {
    let (spec, members) = n1_at_2_5_1();
    let Anchors::Split { core, .. } = &spec.anchors else { panic!("split anchors") };
    let restricted: Vec<_> = members.iter().filter(|m| core.is_subset_of(m)).cloned().collect();
    assert_eq!(covering_number(&restricted, 1).unwrap().tau, 1);
}

#[test]
fn n1_union_structure_through_core() {
    let (spec, members) = n1_at_2_5_1();
    let Anchors::Split { core, left, right } = &spec.anchors else { panic!("split anchors") };
    assert_eq!(covering_number(&members, 1).unwrap().tau, 2);
    let s = cover_union_structure(&members, 1, core).unwrap();
    assert_ne!(left, right);
    assert_eq!(s.union.as_ref(), Some(right));
    assert_eq!(s.m, spec.params.k - 1);
    assert!(s.holds());
}

#[test]
fn residual_against_a_shifted_frame() {
    let params = Params::new(2, 4).unwrap();
    let u = Arc::new(enumerate_universe(params).unwrap());
    let spec = FamilySpec::canonical(Kind::N2, params, 1).unwrap();
    let Anchors::Frame(z) = &spec.anchors else { panic!("frame anchor") };
    let kept = &z.blocks()[..2];
    let other = u.blocks().find(|b| b.bits() & z.support() == 0).unwrap();
    let shifted = PartialPartition::new(params, vec![kept[0], kept[1], other]).unwrap();
    let f = n2(&u, z.clone(), 1).unwrap().members().unwrap();
    let g = n2(&u, shifted.clone(), 1).unwrap().members().unwrap();

    let same = residual_family(&f, &f, 1).unwrap();
    assert!(same.members.is_empty() && same.holds);

    let res = residual_family(&f, &g, 1).unwrap();
    let g_covers = covering_number(&g, 1).unwrap().min_covers;
    let expected: Vec<_> =
        f.iter().filter(|m| !g_covers.iter().any(|c| c.is_subset_of(m))).cloned().collect();
    assert!(!expected.is_empty());
    assert_eq!(res.members, expected);
    let ratio = BigRational::new(BigInt::from(expected.len()), theta(2, 4, 2).unwrap());
    assert_eq!(res.ratio, ratio);
    assert_eq!(res.holds, res.ratio <= res.bound);
}

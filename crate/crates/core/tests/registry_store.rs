use std::sync::Arc;

use proptest::prelude::*;
use roman_core::profile::{make_template, Keypoint, MotionProfile, TemplateKind};
use roman_core::registry::{ObjectRecord, Registry, RegistryError};
use roman_core::testbed::{Category, Directionality, Manipulation};
use roman_core::TagId;

fn category() -> Category {
    Category::new(Manipulation::Squeeze, Directionality::BiDirectional)
}

fn profile_strategy() -> impl Strategy<Value = MotionProfile> {
    (1.0..10.0f64, prop::collection::vec((0.0..1.0f64, -1.0..1.0f64), 2..12), any::<bool>()).prop_map(
        |(d, mut pts, cont)| {
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            pts.dedup_by(|a, b| a.0 == b.0);
            if pts.len() < 2 {
                pts.push((1.0, 0.0));
            }
            let kps = pts.into_iter().map(|(f, u)| Keypoint::new(f * d, u)).collect();
            MotionProfile::new("random", d, cont, kps).unwrap()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn get_after_put_is_identity(tag in 0u32.., name in "[a-z ]{1,20}", p in profile_strategy()) {
        let dir = tempfile::tempdir().unwrap();
        let reg = Registry::open(dir.path()).unwrap();
        let tag = TagId::parse(&format!("{tag:08x}")).unwrap();
        let stored = reg.put_record(ObjectRecord::new(tag.clone(), name, category(), p)).unwrap();
        prop_assert_eq!(reg.get_record(&tag).unwrap(), stored);
    }
}

#[test]
fn missing_tag_is_not_found() {
    let dir = tempfile::tempdir().unwrap();
    let reg = Registry::open(dir.path()).unwrap();
    assert!(matches!(reg.get("deadbeef"), Err(RegistryError::NotFound(_))));
    assert!(matches!(reg.get("nope"), Err(RegistryError::InvalidTag(_))));
}

#[test]
fn tag_lookup_ignores_case() {
    let dir = tempfile::tempdir().unwrap();
    let reg = Registry::open(dir.path()).unwrap();
    let tag = TagId::parse("ABCDEF01").unwrap();
    reg.put_record(ObjectRecord::new(tag, "x", category(), make_template(TemplateKind::OneWay)))
        .unwrap();
    assert_eq!(reg.get("abcdef01").unwrap().object_name, "x");
}

#[test]
fn updates_are_strictly_ordered() {
    let dir = tempfile::tempdir().unwrap();
    let reg = Registry::open(dir.path()).unwrap();
    let tag = TagId::parse("00000001").unwrap();
    let mut last = None;
    for _ in 0..50 {
        let r = reg
            .put_record(ObjectRecord::new(tag.clone(), "x", category(), make_template(TemplateKind::Periodic)))
            .unwrap();
        if let Some(prev) = last {
            assert!(r.updated_at > prev);
        }
        last = Some(r.updated_at);
    }
}

#[test]
fn concurrent_writers_leave_one_complete_record() {
    let dir = tempfile::tempdir().unwrap();
    let reg = Arc::new(Registry::open(dir.path()).unwrap());
    let tag = TagId::parse("0badf00d").unwrap();
    let handles: Vec<_> = (0..8)
        .map(|i| {
            let reg = reg.clone();
            let tag = tag.clone();
            std::thread::spawn(move || {
                for j in 0..20 {
                    let p = MotionProfile::constant(format!("w{i}-{j}"), 2.0, 0.5).unwrap();
                    reg.put_record(ObjectRecord::new(tag.clone(), "x", category(), p)).unwrap();
                    // readers interleaved with writers must never see a torn file
                    reg.get_record(&tag).unwrap();
                }
            })
        })
        .collect();
    for h in handles {
        h.join().unwrap();
    }
    let rec = reg.get_record(&tag).unwrap();
    assert!(rec.profile.name().starts_with('w'));
    let files: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(files.len(), 1, "temporary files left behind");
}

#[test]
fn list_skips_foreign_files() {
    let dir = tempfile::tempdir().unwrap();
    let reg = Registry::open(dir.path()).unwrap();
    std::fs::write(dir.path().join("README.txt"), "x").unwrap();
    std::fs::write(dir.path().join(".tmp-abc.part"), "{").unwrap();
    for (tag, name) in [("00000002", "b"), ("00000001", "a")] {
        reg.put_record(ObjectRecord::new(TagId::parse(tag).unwrap(), name, category(), make_template(TemplateKind::OneWay)))
            .unwrap();
    }
    let names: Vec<_> = reg.list_records().unwrap().into_iter().map(|r| r.object_name).collect();
    assert_eq!(names, ["a", "b"]);
}

#[test]
fn reopen_sees_previous_records() {
    let dir = tempfile::tempdir().unwrap();
    let tag = TagId::parse("12345678").unwrap();
    let stored = Registry::open(dir.path())
        .unwrap()
        .put_record(ObjectRecord::new(tag.clone(), "x", category(), make_template(TemplateKind::TwoWay)))
        .unwrap();
    assert_eq!(Registry::open(dir.path()).unwrap().get_record(&tag).unwrap(), stored);
}

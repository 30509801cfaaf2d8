use std::collections::BTreeSet;

use crowdwrite_core::corpus::{
    parse_records, partition, write_records, ConditionKey, Domain, Group, IdeaClass, IdeaRecord,
};
use proptest::prelude::*;

fn arb_record() -> impl Strategy<Value = IdeaRecord> {
    (
        prop::sample::select(Group::ALL.to_vec()),
        prop::sample::select(IdeaClass::ALL.to_vec()),
        prop::sample::select(vec!["flash", "air", "plus"]),
        1u32..5,
        prop::sample::select(vec![Domain::MathematicalSciences, Domain::Finance, Domain::Philosophy]),
        0u32..4,
        "[a-z]{1,4}",
        "\\PC{0,40}",
    )
        .prop_map(|(group, class, model, c, domain, round, topic, text)| {
            let condition = ConditionKey::new(group, class, model, c);
            IdeaRecord {
                id: String::new(),
                topic_id: topic,
                domain,
                condition,
                round,
                agent: round % c,
                lang: "en".into(),
                text,
            }
        })
}

fn arb_corpus() -> impl Strategy<Value = Vec<IdeaRecord>> {
    prop::collection::vec(arb_record(), 0..40).prop_map(|mut rs| {
        for (i, r) in rs.iter_mut().enumerate() {
            r.id = format!("r{i}");
        }
        rs
    })
}

proptest! {
    #[test]
    fn serialize_parse_round_trip(records in arb_corpus()) {
        let mut buf = Vec::new();
        write_records(&mut buf, &records).unwrap();
        let back = parse_records(buf.as_slice()).unwrap();
        prop_assert_eq!(back, records);
    }

    #[test]
    fn partition_is_a_bijection(records in arb_corpus()) {
        let ids: BTreeSet<String> = records.iter().map(|r| r.id.clone()).collect();
        let index = partition(records.clone()).unwrap();
        let mut seen = BTreeSet::new();
        for (cell, members) in &index.cells {
            for id in members {
                prop_assert!(seen.insert(id.clone()), "{} in two cells", id);
                prop_assert_eq!(&index.get(id).unwrap().condition.cell(), cell);
            }
        }
        prop_assert_eq!(seen, ids);
        let grouped: usize = index.groups().iter().map(|g| index.group_ids(*g).len()).sum();
        prop_assert_eq!(grouped, records.len());
    }
}

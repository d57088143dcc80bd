//! The published JSON schema stays in step with the serializer.

mod common;

use rand::SeedableRng;
use serde_json::Value;

fn schema() -> Value {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../docs/document.schema.json");
    serde_json::from_str(&std::fs::read_to_string(path).expect("schema file")).expect("schema is JSON")
}

/// Every object key a serialized document uses.
fn keys(v: &Value, out: &mut std::collections::BTreeSet<String>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                out.insert(k.clone());
                keys(x, out);
            }
        }
        Value::Array(a) => a.iter().for_each(|x| keys(x, out)),
        _ => {}
    }
}

#[test]
fn schema_names_every_serialized_key() {
    let text = schema().to_string();
    let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    let mut seen = std::collections::BTreeSet::new();
    for _ in 0..200 {
        let doc: Value = serde_json::from_str(&common::random_document(&mut r).to_json()).unwrap();
        keys(&doc, &mut seen);
    }
    for k in &seen {
        assert!(text.contains(&format!("\"{k}\"")), "schema does not mention {k:?}");
    }
    for kind in ["frame", "group", "graphic", "text", "image"] {
        assert!(text.contains(&format!("\"const\":\"{kind}\"")), "{kind}");
    }
}

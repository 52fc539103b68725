use appraisal_core::corpus::{
    read_corpus, write_corpus, Corpus, CorpusFormat, EmotionLabel, Instance,
};
use proptest::prelude::*;

fn text_strategy() -> impl Strategy<Value = String> {
    "[A-Za-zÄÖÜäöüß ,.!?'…]{1,40}".prop_filter("needs visible text", |s| !s.trim().is_empty())
}

fn label_strategy() -> impl Strategy<Value = Option<String>> {
    proptest::option::of(prop_oneof![
        Just("anger".to_string()),
        Just("joy".to_string()),
        Just("Wut".to_string()),
        Just("love".to_string()),
    ])
}

fn build(name: &str, rows: &[(Option<String>, String)]) -> Corpus {
    let instances = rows
        .iter()
        .enumerate()
        .map(|(i, (label, text))| Instance {
            id: format!("{name}-{}", i + 1),
            text: text.trim().to_string(),
            emotion: label.as_deref().map(EmotionLabel::new),
            source: name.to_string(),
            emotion_masked: false,
        })
        .collect();
    Corpus::new(name, instances).unwrap()
}

fn comparable(c: &Corpus) -> Vec<(String, String, Option<String>)> {
    c.instances()
        .iter()
        .map(|i| {
            (
                i.id.clone(),
                i.text.clone(),
                i.emotion.as_ref().map(|e| e.as_str().to_string()),
            )
        })
        .collect()
}

proptest! {
    #[test]
    fn write_then_read_preserves_instances(
        rows in proptest::collection::vec((label_strategy(), text_strategy()), 1..30),
        fmt in prop_oneof![Just(CorpusFormat::IsearTsv), Just(CorpusFormat::Jsonl), Just(CorpusFormat::Blogs)],
    ) {
        let original = build("rt", &rows);
        let mut buf = Vec::new();
        write_corpus(&mut buf, &original, fmt).unwrap();
        let first = read_corpus(buf.as_slice(), "rt", fmt).unwrap();
        prop_assert_eq!(comparable(&first), comparable(&original));

        let mut again = Vec::new();
        write_corpus(&mut again, &first, fmt).unwrap();
        prop_assert_eq!(&again, &buf);
    }
}

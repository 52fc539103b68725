//! Regenerates the checked-in test fixtures under `tests/fixtures`.
//!
//! ```text
//! cargo run -p appraisal-core --example make_fixtures -- crates/core/tests/fixtures
//! ```
//!
//! * `enisear_synthetic.tsv`: 1001 event descriptions, 143 per emotion, in
//!   the enISEAR layout with the emotion word replaced by `…`.
//! * `agreement/{emovis,emohide}_full.jsonl`: one annotator's judgments
//!   for every instance, with per-emotion positive counts fixed in advance.
//! * `agreement/{emovis,emohide}_{a1,a2}.jsonl`: two annotators on a
//!   210-instance stratified sample, with the second annotator's answers
//!   flipped until each dimension reaches a chosen κ.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use appraisal_core::agreement::{cohen_kappa, write_judgments, Judgment, Setting};
use appraisal_core::corpus::{
    load_corpus, stratified_sample, write_corpus, Corpus, CorpusFormat, EmotionLabel, Instance,
};
use appraisal_core::schema::{AppraisalSchema, AppraisalVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EMOTIONS: [&str; 7] = [
    "anger", "disgust", "fear", "guilt", "joy", "sadness", "shame",
];
const PER_EMOTION: usize = 143;
const SAMPLE_SIZE: usize = 210;
const SEED: u64 = 2020;
const BASE_TIME: u64 = 1_546_300_800;

/// Positive counts per emotion (rows in `EMOTIONS` order) for attention,
/// certainty, effort, pleasantness, responsibility, control, circumstance.
const VISIBLE_COUNTS: [[usize; 7]; 7] = [
    [141, 143, 17, 0, 4, 1, 3],
    [13, 143, 65, 0, 14, 8, 11],
    [126, 24, 139, 0, 18, 4, 115],
    [70, 141, 108, 0, 141, 93, 11],
    [143, 143, 0, 143, 43, 21, 18],
    [120, 141, 136, 0, 4, 2, 132],
    [10, 137, 105, 0, 113, 23, 4],
];
const HIDDEN_COUNTS: [[usize; 7]; 7] = [
    [130, 113, 60, 0, 8, 1, 11],
    [58, 129, 35, 1, 16, 7, 35],
    [126, 13, 125, 0, 33, 11, 108],
    [54, 128, 29, 1, 139, 85, 21],
    [134, 125, 4, 139, 55, 46, 56],
    [121, 105, 69, 1, 10, 3, 119],
    [25, 98, 33, 1, 113, 62, 18],
];

/// Two-annotator κ per dimension on the sample. Each is nudged by 0.0015
/// (up for visible, down for hidden) so that the differences of the
/// rounded values are reproduced as well.
const VISIBLE_KAPPA: [f64; 7] = [0.55, 0.71, 0.44, 0.93, 0.80, 0.66, 0.65];
const HIDDEN_KAPPA: [f64; 7] = [0.30, 0.43, 0.38, 0.87, 0.64, 0.71, 0.54];
const NUDGE: f64 = 0.0015;

const WHO: [&str; 12] = [
    "my brother",
    "my sister",
    "a colleague",
    "my best friend",
    "my neighbour",
    "my boss",
    "my mother",
    "my father",
    "a stranger",
    "my flatmate",
    "my partner",
    "an old classmate",
];
const WHEN: [&str; 12] = [
    "",
    " last summer",
    " at work",
    " yesterday",
    " during the holidays",
    " at school",
    " a few years ago",
    " on the bus",
    " last weekend",
    " at a party",
    " in the morning",
    " after dinner",
];

const CLAUSES: [&[&str]; 7] = [
    // anger
    &[
        "{who} lied to me about the money",
        "{who} took credit for my work",
        "someone scratched my car and drove off",
        "{who} ignored my message on purpose",
        "the landlord refused to fix the heating",
        "{who} shouted at me in front of everyone",
        "my train was cancelled without any announcement",
        "{who} broke a promise again",
        "a driver cut me off and then honked",
        "{who} blamed me for their mistake",
        "the company charged me twice and would not refund",
        "{who} read my private diary",
        "the referee made an unfair decision",
        "{who} cheated in the game",
        "my application was rejected because of a clerical error",
        "{who} kept interrupting me",
        "the shop sold me a broken phone and denied it",
        "{who} insulted my family",
        "the neighbours played loud music all night",
        "{who} stole my bike",
    ],
    // disgust
    &[
        "I found mould in the bread I was eating",
        "{who} spat on the pavement next to me",
        "the toilet on the train was filthy",
        "I saw maggots in the rubbish bin",
        "{who} picked their nose at the table",
        "I smelled rotten meat in the fridge",
        "my kitten was sick and I had to clean it up",
        "I stepped in dog poo",
        "there was a hair in my soup",
        "{who} chewed with their mouth open",
        "I saw a rat eating leftovers",
        "the kitchen sink was full of slime",
        "{who} told a vile joke",
        "I found a cockroach in my cereal",
        "the public bathroom smelled of vomit",
        "{who} coughed all over the food",
        "I cleaned a blocked drain",
        "the milk had gone sour and lumpy",
        "I watched a video of someone eating insects",
        "{who} left used tissues on the sofa",
    ],
    // fear
    &[
        "a dog chased me down a dark street",
        "I was having a heart attack",
        "I heard footsteps behind me at night",
        "the plane shook during heavy turbulence",
        "I got lost alone in the forest",
        "{who} was rushed to hospital",
        "I thought someone had broken into the house",
        "the car skidded on the icy road",
        "I was waiting for the results of a biopsy",
        "a stranger followed me home",
        "the lift got stuck between floors",
        "I almost drowned in the sea",
        "there was a fire alarm in the middle of the night",
        "a man with a knife approached me",
        "I had to walk past a gang",
        "the storm tore the roof off the shed",
        "I could not find my child in the crowd",
        "I woke up and could not breathe",
        "the brakes failed on my bike going downhill",
        "I heard an explosion nearby",
    ],
    // guilt
    &[
        "I went on holiday and left our cat behind",
        "I forgot {who}'s birthday",
        "I lied to {who} about where I had been",
        "I broke {who}'s favourite mug and hid it",
        "I did not visit my grandmother before she died",
        "I copied my homework from {who}",
        "I took money from my parents without asking",
        "I shouted at {who} for no reason",
        "I missed my friend's wedding",
        "I ate the last piece of cake that was meant for {who}",
        "I broke my promise to help {who} move",
        "I did not return the book I had borrowed",
        "I forgot to feed the fish for a week",
        "I blamed {who} for something I did",
        "I skipped work and said I was ill",
        "I cheated on my diet again",
        "I crashed {who}'s car",
        "I kept the extra change the cashier gave me",
        "I did not call {who} back",
        "I was rude to a waiter",
    ],
    // joy
    &[
        "I knew that I was going back to Florida earlier than I thought",
        "I passed my driving test",
        "{who} surprised me with concert tickets",
        "I got the job I wanted",
        "my daughter was born",
        "I won the football match",
        "{who} said yes to my proposal",
        "I finished my thesis",
        "we moved into our new flat",
        "I saw {who} after years apart",
        "I got a scholarship",
        "the sun came out on our wedding day",
        "I received a letter from {who}",
        "I was promoted",
        "we adopted a puppy",
        "I won a prize in the raffle",
        "{who} recovered from the illness",
        "I graduated from university",
        "my team won the championship",
        "I finally paid off my loan",
    ],
    // sadness
    &[
        "I found out one of my favourite shops had shut down",
        "my grandmother passed away",
        "{who} moved to another country",
        "my dog had to be put down",
        "I had to say goodbye to {who} at the airport",
        "my parents got divorced",
        "I failed to get into the course",
        "our house was sold",
        "{who} ended our relationship",
        "I heard that {who} was seriously ill",
        "I lost touch with my oldest friend",
        "my cat died",
        "I spent the holidays alone",
        "the old tree in our garden was cut down",
        "I watched the news about the flood victims",
        "{who} did not remember me",
        "my childhood home was demolished",
        "I visited the grave of my grandfather",
        "the summer camp ended",
        "I read the last letter from {who}",
    ],
    // shame
    &[
        "I tripped on stage in front of the whole school",
        "{who} found out I had lied",
        "I forgot my lines in the play",
        "my trousers ripped in class",
        "I was caught stealing sweets as a child",
        "I got drunk and embarrassed myself at {who}'s party",
        "I failed an easy exam",
        "{who} saw me crying in public",
        "my card was declined at the checkout",
        "I called my teacher mum",
        "I was told off by the boss in front of colleagues",
        "I sang badly at karaoke",
        "my essay was read out as a bad example",
        "I forgot the name of {who}",
        "I wet the bed at a sleepover",
        "I was the only one who did not know the answer",
        "my parents argued loudly in front of my friends",
        "I sent a private message to the wrong group",
        "I fell asleep during the meeting",
        "I was caught cheating in a test",
    ],
];

/// Chance that a description is drawn from another emotion's events.
const CROSS_TALK: f64 = 0.12;

fn make_corpus(rng: &mut ChaCha8Rng) -> Corpus {
    let mut rows = Vec::with_capacity(EMOTIONS.len() * PER_EMOTION);
    for (e, emotion) in EMOTIONS.iter().enumerate() {
        for _ in 0..PER_EMOTION {
            let pool = if rng.gen_bool(CROSS_TALK) {
                rng.gen_range(0..EMOTIONS.len())
            } else {
                e
            };
            let clause = CLAUSES[pool].choose(rng).unwrap();
            let who = WHO.choose(rng).unwrap();
            let when = WHEN.choose(rng).unwrap();
            let text = format!("I felt … when {}{when}.", clause.replace("{who}", who));
            rows.push((emotion.to_string(), text));
        }
    }
    // Interleave emotions the way a collection campaign would.
    rows.shuffle(rng);
    let instances = rows
        .into_iter()
        .enumerate()
        .map(|(i, (emotion, text))| Instance {
            id: format!("enisear_synthetic-{}", i + 1),
            text,
            emotion: Some(EmotionLabel::new(&emotion)),
            source: "enisear_synthetic".into(),
            emotion_masked: true,
        })
        .collect();
    Corpus::new("enisear_synthetic", instances).unwrap()
}

fn full_judgments(
    corpus: &Corpus,
    counts: &[[usize; 7]; 7],
    setting: Setting,
    rng: &mut ChaCha8Rng,
) -> Vec<Judgment> {
    let mut values: BTreeMap<&str, Vec<bool>> = BTreeMap::new();
    for (e, emotion) in EMOTIONS.iter().enumerate() {
        let ids: Vec<&str> = corpus
            .instances()
            .iter()
            .filter(|i| i.emotion.as_ref().is_some_and(|l| l.as_str() == *emotion))
            .map(|i| i.id.as_str())
            .collect();
        assert_eq!(ids.len(), PER_EMOTION);
        for id in &ids {
            values.insert(id, vec![false; 7]);
        }
        for (d, &count) in counts[e].iter().enumerate() {
            let mut order = ids.clone();
            order.shuffle(rng);
            for id in &order[..count] {
                values.get_mut(id).unwrap()[d] = true;
            }
        }
    }
    corpus
        .instances()
        .iter()
        .enumerate()
        .map(|(i, inst)| {
            let v = AppraisalVector::new(AppraisalSchema::Split7, values[inst.id.as_str()].clone())
                .unwrap();
            Judgment::new("a1", inst.id.clone(), setting, v, BASE_TIME + i as u64).unwrap()
        })
        .collect()
}

/// Picks how many positives (`b`) and negatives (`c`) of `first` to flip
/// so that κ is as close to `target` as possible.
fn best_flips(first: &[bool], target: f64) -> (usize, usize, f64) {
    let p = first.iter().filter(|&&x| x).count();
    let n = first.len();
    let mut best = (0, 0, f64::INFINITY);
    for b in 0..=p {
        for c in 0..=(n - p) {
            let second: Vec<bool> = (0..n)
                .map(|i| if i < p { i >= b } else { i - p < c })
                .collect();
            let sorted_first: Vec<bool> = (0..n).map(|i| i < p).collect();
            let k = cohen_kappa(&sorted_first, &second).unwrap();
            if (k - target).abs() < (best.2 - target).abs() - 1e-12 {
                best = (b, c, k);
            }
        }
    }
    best
}

fn second_annotator(
    first: &[Judgment],
    targets: &[f64; 7],
    nudge: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<Judgment> {
    let mut values: Vec<Vec<bool>> = first.iter().map(|j| j.vector.values().to_vec()).collect();
    for (d, &t) in targets.iter().enumerate() {
        let column: Vec<bool> = first.iter().map(|j| j.vector.values()[d]).collect();
        let (b, c, k) = best_flips(&column, t + nudge);
        assert!(
            (k - t).abs() < 0.004,
            "dimension {d}: κ {k} too far from {t}"
        );
        let mut pos: Vec<usize> = (0..column.len()).filter(|&i| column[i]).collect();
        let mut neg: Vec<usize> = (0..column.len()).filter(|&i| !column[i]).collect();
        pos.shuffle(rng);
        neg.shuffle(rng);
        for &i in pos[..b].iter().chain(&neg[..c]) {
            values[i][d] = !values[i][d];
        }
    }
    first
        .iter()
        .zip(values)
        .map(|(j, v)| {
            Judgment::new(
                "a2",
                j.instance_id.clone(),
                j.setting,
                AppraisalVector::new(AppraisalSchema::Split7, v).unwrap(),
                j.timestamp + 100_000,
            )
            .unwrap()
        })
        .collect()
}

fn write(path: PathBuf, judgments: &[Judgment]) {
    let file = File::create(&path).unwrap();
    write_judgments(BufWriter::new(file), judgments).unwrap();
    println!("wrote {} ({} judgments)", path.display(), judgments.len());
}

fn main() {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures"));
    fs::create_dir_all(out.join("agreement")).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);

    let corpus_path = out.join("enisear_synthetic.tsv");
    let corpus = make_corpus(&mut rng);
    write_corpus(
        BufWriter::new(File::create(&corpus_path).unwrap()),
        &corpus,
        CorpusFormat::IsearTsv,
    )
    .unwrap();
    // Ids come from the reader, so re-read to be sure they line up.
    let corpus = load_corpus(&corpus_path, CorpusFormat::IsearTsv).unwrap();
    println!(
        "wrote {} ({} instances)",
        corpus_path.display(),
        corpus.len()
    );

    let sample = stratified_sample(&corpus, SAMPLE_SIZE, SEED).unwrap();
    for (name, counts, setting, targets, nudge) in [
        (
            "emovis",
            &VISIBLE_COUNTS,
            Setting::EmoVis,
            &VISIBLE_KAPPA,
            NUDGE,
        ),
        (
            "emohide",
            &HIDDEN_COUNTS,
            Setting::EmoHide,
            &HIDDEN_KAPPA,
            -NUDGE,
        ),
    ] {
        let full = full_judgments(&corpus, counts, setting, &mut rng);
        write(out.join(format!("agreement/{name}_full.jsonl")), &full);
        let by_id: BTreeMap<&str, &Judgment> =
            full.iter().map(|j| (j.instance_id.as_str(), j)).collect();
        let a1: Vec<Judgment> = sample
            .instances()
            .iter()
            .map(|i| by_id[i.id.as_str()].clone())
            .collect();
        let a2 = second_annotator(&a1, targets, nudge, &mut rng);
        write(out.join(format!("agreement/{name}_a1.jsonl")), &a1);
        write(out.join(format!("agreement/{name}_a2.jsonl")), &a2);
    }
}

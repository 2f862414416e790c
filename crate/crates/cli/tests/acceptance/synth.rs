//! Synthetic rulings with known entity values, plus the files a pipeline run
//! over them needs.

use std::fs;
use std::path::Path;

use legalex_core::eval::{GoldRecord, NegativeGroup};
use legalex_core::extract_llm::{prompt_sha256, render_prompt, MockFixture, PromptTemplate};
use legalex_core::segmenter::{Origin, Segment};
use legalex_core::EntityKind;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

const FILLER: [&str; 28] = [
    "costas",
    "honorarios",
    "apelación",
    "expediente",
    "notificación",
    "testigos",
    "vehículo",
    "colectivo",
    "semáforo",
    "esquina",
    "velocidad",
    "conductor",
    "aseguradora",
    "citada",
    "garantía",
    "audiencia",
    "prueba",
    "informativa",
    "declaración",
    "responsabilidad",
    "calzada",
    "avenida",
    "policía",
    "sumario",
    "letrado",
    "traslado",
    "fojas",
    "resolución",
];

#[derive(Debug, Clone)]
pub struct Ruling {
    pub id: String,
    pub date: String,
    pub text: String,
    pub gold: Vec<GoldRecord>,
}

/// Spanish rendering with `.` thousands and `,` decimals; cents only when
/// non-zero.
pub fn es_amount(v: f64) -> String {
    let cents = (v * 100.0).round() as i64;
    let (int, frac) = (cents / 100, cents % 100);
    let digits = int.to_string();
    let mut grouped = String::new();
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i) % 3 == 0 {
            grouped.push('.');
        }
        grouped.push(c);
    }
    if frac != 0 {
        grouped.push_str(&format!(",{frac:02}"));
    }
    grouped
}

pub fn es_percent(v: f64) -> String {
    v.to_string().replace('.', ",")
}

fn filler(rng: &mut ChaCha8Rng, n: usize) -> String {
    let mut words: Vec<&str> = (0..n).map(|_| *FILLER.choose(rng).unwrap()).collect();
    if let Some(w) = words.last_mut() {
        *w = "resolución.";
    }
    words.join(" ")
}

pub fn filler_text(seed: u64, n: usize) -> String {
    filler(&mut ChaCha8Rng::seed_from_u64(seed), n)
}

fn percent(rng: &mut ChaCha8Rng) -> f64 {
    let whole = rng.random_range(2..60) as f64;
    if rng.random_bool(0.4) {
        whole + 0.5
    } else {
        whole
    }
}

fn amount(rng: &mut ChaCha8Rng) -> f64 {
    let base = rng.random_range(100..5000) as f64 * 1000.0;
    if rng.random_bool(0.3) {
        base + rng.random_range(1..99) as f64 / 100.0
    } else {
        base
    }
}

/// Twenty in-scope rulings dated across 2022, each with physical disability
/// and moral damage, most with psychological disability and some with a
/// combined psychophysical figure.
pub fn rulings() -> Vec<Ruling> {
    let mut rng = ChaCha8Rng::seed_from_u64(2022);
    (0..20)
        .map(|i| {
            let id = format!("s{:02}", i + 1);
            let date = format!("2022-{:02}-{:02}", i % 10 + 1, 5 + i);
            let phys = (percent(&mut rng), amount(&mut rng));
            let psych = (i % 3 != 0).then(|| (percent(&mut rng), amount(&mut rng)));
            let combined = (i % 4 == 0).then(|| (percent(&mut rng), amount(&mut rng)));
            let moral = amount(&mut rng);

            let mut paragraphs = vec![
                format!(
                    "Fecha de firma: {date}\nJUZGADO NACIONAL EN LO CIVIL\nAUTOS: \"{id} c/ Transportes del Sur s/ daños y perjuicios (acc. tránsito c/ lesiones)\"\nSENTENCIA"
                ),
                filler(&mut rng, 130),
                format!(
                    "Con base en la pericia médica, corresponde fijar la incapacidad física permanente del actor en el {} % de la total obrera, por lo que se otorga por este rubro la suma de $ {}.",
                    es_percent(phys.0),
                    es_amount(phys.1)
                ),
                filler(&mut rng, 140),
            ];
            if let Some((p, a)) = psych {
                paragraphs.push(format!(
                    "En cuanto a la incapacidad psicológica, la perita psicóloga la estimó en un {} %, y se reconoce por ello la suma de $ {}.",
                    es_percent(p),
                    es_amount(a)
                ));
                paragraphs.push(filler(&mut rng, 150));
            }
            if let Some((p, a)) = combined {
                paragraphs.push(format!(
                    "Valorada en conjunto, la incapacidad psicofísica total asciende al {} %, con una indemnización global de $ {}.",
                    es_percent(p),
                    es_amount(a)
                ));
                paragraphs.push(filler(&mut rng, 150));
            }
            paragraphs.push(format!(
                "Por el daño moral padecido, atendiendo a los padecimientos espirituales, se fija la suma de $ {}.",
                es_amount(moral)
            ));
            paragraphs.push(filler(&mut rng, 160));
            paragraphs.push("Fecha de firma: 2023-01-01\nRegístrese y notifíquese.".to_string());

            let rec = |kind, v: Option<(f64, f64)>| GoldRecord {
                doc_id: id.clone(),
                kind,
                gold_percentage: v.map(|x| x.0),
                gold_amount: v.map(|x| x.1),
                segments: Vec::new(),
            };
            let mut gold = vec![
                rec(EntityKind::PhysicalDisability, Some(phys)),
                rec(EntityKind::PsychologicalDisability, psych),
                rec(EntityKind::PsychophysicalDisability, combined),
                rec(EntityKind::MoralDamage, None),
            ];
            gold[3].gold_amount = Some(moral);
            Ruling {
                id,
                date,
                text: paragraphs.join("\n\n\n\n"),
                gold,
            }
        })
        .collect()
}

/// A ruling from another jurisdiction that the scope filter must drop.
pub fn out_of_scope() -> (String, String) {
    (
        "x01".to_string(),
        format!(
            "JUZGADO NACIONAL DEL TRABAJO\nAUTOS: \"x01 c/ Metalúrgica SA s/ despido\"\nSENTENCIA\n\n{}\nincapacidad física del 30 % y $ 100.000.",
            filler_text(99, 200)
        ),
    )
}

/// Write the rulings and a manifest under `dir/rulings`.
pub fn write_corpus(dir: &Path, rulings: &[Ruling]) {
    let root = dir.join("rulings");
    fs::create_dir_all(&root).unwrap();
    let mut manifest = String::new();
    for r in rulings {
        fs::write(root.join(format!("{}.txt", r.id)), &r.text).unwrap();
        manifest.push_str(&json!({"id": r.id, "path": format!("{}.txt", r.id), "ruling_date": r.date}).to_string());
        manifest.push('\n');
    }
    let (id, text) = out_of_scope();
    fs::write(root.join(format!("{id}.txt")), text).unwrap();
    manifest.push_str(&json!({"id": id, "path": format!("{id}.txt"), "ruling_date": "2022-03-01"}).to_string());
    manifest.push('\n');
    fs::write(root.join("manifest.jsonl"), manifest).unwrap();
}

pub fn write_jsonl<T: serde::Serialize>(path: &Path, items: &[T]) {
    let mut f = fs::File::create(path).unwrap();
    legalex_core::jsonl::to_writer(&mut f, items).unwrap();
}

pub const EXEMPLARS: &str = r#"
[retrieval.exemplars]
physical_disability = ["corresponde fijar la incapacidad física permanente del actor en el porcentaje de la total obrera según la pericia médica"]
psychological_disability = ["incapacidad psicológica estimada por la perita psicóloga en un porcentaje y se reconoce la suma"]
psychophysical_disability = ["incapacidad psicofísica total valorada en conjunto con una indemnización global"]
moral_damage = ["daño moral padecido por los padecimientos espirituales se fija la suma"]
"#;

pub fn config(kinds: &[EntityKind], extra: &str) -> String {
    let kinds: Vec<String> = kinds.iter().map(|k| format!("\"{k}\"")).collect();
    format!(
        r#"config_version = 1
output_dir = "out"
kinds = [{}]
max_workers = 4

[corpus]
path = "rulings/manifest.jsonl"
clean_patterns = ['(?m)^Fecha de firma: .*\n']
scope_must = ['daños y perjuicios']

[retrieval]
k = 2
top_m = 10
embedder = {{ kind = "mock", dim = 256, seed = 7 }}
{EXEMPLARS}
[llm]
backend = "mock"
mock_fixtures = "fixtures.jsonl"
max_concurrent_requests = 4

[hallucination]
p_u = 0.5

[eval]
gold = "gold.jsonl"
{extra}
"#,
        kinds.join(", ")
    )
}

/// Mock reply echoing a value pair as the JSON answer format.
pub fn answer(pct: Option<f64>, amt: Option<f64>) -> String {
    json!({"percentage": pct, "amount": amt}).to_string()
}

/// Thirty groups of filler segments. None contains a digit, `%`, `$` or an
/// entity keyword.
pub fn negatives() -> Vec<NegativeGroup> {
    (0..30)
        .map(|i| {
            let kind = EntityKind::ALL[i % 4];
            let segments = (0..2)
                .map(|j| {
                    let text = filler_text(1000 + (i * 2 + j) as u64, 90);
                    Segment {
                        doc_id: format!("n{i:02}"),
                        origin: Origin::ExpandedBlock,
                        char_start: j * 10_000,
                        char_end: j * 10_000 + text.len(),
                        center_block: Some(j),
                        score: Some(0.5 - j as f64 * 0.1),
                        text,
                    }
                })
                .collect();
            NegativeGroup {
                doc_id: format!("n{i:02}"),
                kind,
                segments,
            }
        })
        .collect()
}

/// Negative-run fixtures: groups with `i % 10 < 3` get an invented answer.
pub fn negative_fixtures(groups: &[NegativeGroup]) -> Vec<MockFixture> {
    let tpl = PromptTemplate::default();
    groups
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let prompt = render_prompt(&tpl, g.kind, &g.segments).unwrap();
            let invent = i % 10 < 3;
            let text = if invent {
                answer(g.kind.carries_percentage().then_some(20.0), Some(150000.0))
            } else {
                answer(None, None)
            };
            MockFixture {
                prompt_sha256: prompt_sha256(&prompt),
                response_text: text,
                token_probs: Some(if invent {
                    vec![0.97, 0.62, 0.91]
                } else {
                    vec![0.99, 0.98]
                }),
            }
        })
        .collect()
}

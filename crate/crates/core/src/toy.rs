//! Synthetic family / affiliation benchmark.
//!
//! Families of three generations live, work and are born in cities that
//! belong to countries. Residence and birthplace are correlated with family
//! and employer so that several relation paths often reach the same entity.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kg::{EntityId, KnowledgeGraph, Triple, Vocab};
use crate::qa::{write_qa, QuestionInstance};

pub const RELATIONS: [&str; 8] = [
    "father",
    "mother",
    "spouse",
    "works_for",
    "located_in",
    "born_in",
    "lives_in",
    "part_of",
];
const FATHER: usize = 0;
const MOTHER: usize = 1;
const SPOUSE: usize = 2;
const WORKS_FOR: usize = 3;
const LOCATED_IN: usize = 4;
const BORN_IN: usize = 5;
const LIVES_IN: usize = 6;
const PART_OF: usize = 7;

#[derive(Clone, Debug, PartialEq)]
pub struct ToyConfig {
    pub families: usize,
    pub cities: usize,
    pub companies: usize,
    pub countries: usize,
    /// Upper bound on questions per hop bucket before splitting.
    pub questions_per_hop: usize,
    pub seed: u64,
}

impl Default for ToyConfig {
    fn default() -> Self {
        Self {
            families: 16,
            cities: 16,
            companies: 16,
            countries: 4,
            questions_per_hop: 900,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ToyBenchmark {
    pub kg: KnowledgeGraph,
    pub train: Vec<QuestionInstance>,
    pub valid: Vec<QuestionInstance>,
    pub test: Vec<QuestionInstance>,
}

struct Template {
    chain: &'static [usize],
    /// `{}` marks the topic mention.
    phrasings: &'static [&'static str],
}

const ONE_HOP: &[Template] = &[
    Template {
        chain: &[FATHER],
        phrasings: &["who is the father of {}", "who is {}'s father", "name the father of {}"],
    },
    Template {
        chain: &[MOTHER],
        phrasings: &["who is the mother of {}", "who is {}'s mother", "name the mother of {}"],
    },
    Template {
        chain: &[SPOUSE],
        phrasings: &["who is {} married to", "who is the spouse of {}", "who is {}'s partner"],
    },
    Template {
        chain: &[WORKS_FOR],
        phrasings: &["which company does {} work for", "who employs {}", "what is the employer of {}"],
    },
    Template {
        chain: &[LIVES_IN],
        phrasings: &["where does {} live", "which city is {}'s home", "in which city does {} reside"],
    },
    Template {
        chain: &[BORN_IN],
        phrasings: &["where was {} born", "what is the birthplace of {}", "in which city was {} born"],
    },
    Template {
        chain: &[LOCATED_IN],
        phrasings: &["where is {} located", "in which city is {} based"],
    },
    Template {
        chain: &[PART_OF],
        phrasings: &["which country is {} in", "{} belongs to which country"],
    },
];

const TWO_HOP: &[Template] = &[
    Template {
        chain: &[FATHER, FATHER],
        phrasings: &["who is the paternal grandfather of {}", "who is the father of {}'s father"],
    },
    Template {
        chain: &[MOTHER, MOTHER],
        phrasings: &["who is the maternal grandmother of {}", "who is the mother of {}'s mother"],
    },
    Template {
        chain: &[SPOUSE, FATHER],
        phrasings: &["who is the father-in-law of {}", "who is the father of {}'s spouse"],
    },
    Template {
        chain: &[WORKS_FOR, LOCATED_IN],
        phrasings: &["in which city is the employer of {} located", "where is the company {} works for based"],
    },
    Template {
        chain: &[BORN_IN, PART_OF],
        phrasings: &["in which country was {} born", "what country is {}'s birthplace in"],
    },
    Template {
        chain: &[LIVES_IN, PART_OF],
        phrasings: &["which country does {} live in", "in what country is {}'s home"],
    },
    Template {
        chain: &[FATHER, BORN_IN],
        phrasings: &["where was {}'s father born", "what is the birthplace of the father of {}"],
    },
    Template {
        chain: &[FATHER, WORKS_FOR],
        phrasings: &["which company does the father of {} work for", "who employs {}'s father"],
    },
    Template {
        chain: &[SPOUSE, WORKS_FOR],
        phrasings: &["where does the spouse of {} work", "who employs {}'s partner"],
    },
    Template {
        chain: &[MOTHER, LIVES_IN],
        phrasings: &["where does {}'s mother live", "in which city does the mother of {} reside"],
    },
];

struct Builder {
    entities: Vocab,
    triples: Vec<Triple>,
}

impl Builder {
    fn entity(&mut self, label: String) -> EntityId {
        self.entities.intern(label)
    }

    fn add(&mut self, h: EntityId, r: usize, t: EntityId) {
        self.triples.push(Triple::new(h, r, t));
    }

    fn marry(&mut self, a: EntityId, b: EntityId) {
        self.add(a, SPOUSE, b);
        self.add(b, SPOUSE, a);
    }
}

fn pick<T: Copy>(rng: &mut impl Rng, xs: &[T]) -> T {
    xs[rng.gen_range(0..xs.len())]
}

fn build_kg(cfg: &ToyConfig, rng: &mut ChaCha8Rng) -> Result<KnowledgeGraph> {
    if cfg.families == 0 || cfg.cities == 0 || cfg.companies == 0 || cfg.countries == 0 {
        return Err(Error::InvalidArgument("toy sizes must be positive".into()));
    }
    let mut b = Builder {
        entities: Vocab::new(),
        triples: Vec::new(),
    };
    let countries: Vec<EntityId> = (0..cfg.countries).map(|i| b.entity(format!("country_{i}"))).collect();
    let cities: Vec<EntityId> = (0..cfg.cities).map(|i| b.entity(format!("city_{i}"))).collect();
    for (i, &c) in cities.iter().enumerate() {
        b.add(c, PART_OF, countries[i % countries.len()]);
    }
    let companies: Vec<EntityId> = (0..cfg.companies).map(|i| b.entity(format!("company_{i}"))).collect();
    let mut company_city = Vec::with_capacity(companies.len());
    for &c in &companies {
        let city = pick(rng, &cities);
        b.add(c, LOCATED_IN, city);
        company_city.push(city);
    }
    let mut next_person = 0;
    let mut person = |b: &mut Builder| {
        next_person += 1;
        b.entity(format!("person_{}", next_person - 1))
    };
    // adult: (id, employer index, home city)
    let settle = |b: &mut Builder, rng: &mut ChaCha8Rng, p: EntityId, home: Option<EntityId>| -> EntityId {
        let job = rng.gen_range(0..companies.len());
        b.add(p, WORKS_FOR, companies[job]);
        let city = match home {
            Some(h) => h,
            None if rng.gen_bool(0.5) => company_city[job],
            None => pick(rng, &cities),
        };
        b.add(p, LIVES_IN, city);
        city
    };
    for _ in 0..cfg.families {
        let gf = person(&mut b);
        let gm = person(&mut b);
        b.marry(gf, gm);
        let home0 = settle(&mut b, rng, gf, None);
        settle(&mut b, rng, gm, Some(home0));
        for &p in &[gf, gm] {
            let c = pick(rng, &cities);
            b.add(p, BORN_IN, c);
        }
        // one son and one daughter, each with an outside spouse
        for son in [true, false] {
            let child = person(&mut b);
            b.add(child, FATHER, gf);
            b.add(child, MOTHER, gm);
            let born = if rng.gen_bool(0.7) { home0 } else { pick(rng, &cities) };
            b.add(child, BORN_IN, born);
            let partner = person(&mut b);
            let pb = pick(rng, &cities);
            b.add(partner, BORN_IN, pb);
            b.marry(child, partner);
            let home1 = settle(&mut b, rng, child, None);
            settle(&mut b, rng, partner, Some(home1));
            let (dad, mum) = if son { (child, partner) } else { (partner, child) };
            for _ in 0..2 {
                let kid = person(&mut b);
                b.add(kid, FATHER, dad);
                b.add(kid, MOTHER, mum);
                let kb = if rng.gen_bool(0.7) { home1 } else { pick(rng, &cities) };
                b.add(kid, BORN_IN, kb);
                let home = if rng.gen_bool(0.7) { Some(home1) } else { None };
                settle(&mut b, rng, kid, home);
            }
        }
    }
    let relations = Vocab::from_labels(RELATIONS);
    KnowledgeGraph::new(b.entities, relations, b.triples)
}

fn follow(kg: &KnowledgeGraph, start: EntityId, chain: &[usize]) -> BTreeSet<EntityId> {
    let mut frontier = BTreeSet::from([start]);
    for &r in chain {
        frontier = frontier
            .iter()
            .flat_map(|&u| kg.out_edges(u).iter().filter(move |e| e.0 == r).map(|e| e.1))
            .collect();
    }
    frontier
}

fn questions_for(kg: &KnowledgeGraph, templates: &[Template], hop: u32, rng: &mut ChaCha8Rng) -> Result<Vec<QuestionInstance>> {
    let mut out = Vec::new();
    for e in 0..kg.num_entities() {
        for t in templates {
            let answers = follow(kg, e, t.chain);
            if answers.is_empty() || answers.contains(&e) {
                continue;
            }
            let phr = pick(rng, t.phrasings);
            let text = phr.replace("{}", &format!("[{}]", kg.entity_label(e)));
            out.push(QuestionInstance::new(text, [e], answers, Some(hop))?);
        }
    }
    Ok(out)
}

/// Deterministic under `cfg.seed`.
pub fn generate_toy(cfg: &ToyConfig) -> Result<ToyBenchmark> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let kg = build_kg(cfg, &mut rng)?;
    let mut all = Vec::new();
    for (templates, hop) in [(ONE_HOP, 1), (TWO_HOP, 2)] {
        let mut qs = questions_for(&kg, templates, hop, &mut rng)?;
        qs.shuffle(&mut rng);
        qs.truncate(cfg.questions_per_hop);
        all.extend(qs);
    }
    all.shuffle(&mut rng);
    let n = all.len();
    let n_train = n * 8 / 10;
    let n_valid = n / 10;
    let test = all.split_off(n_train + n_valid);
    let valid = all.split_off(n_train);
    Ok(ToyBenchmark {
        kg,
        train: all,
        valid,
        test,
    })
}

impl ToyBenchmark {
    /// Writes `kg.tsv`, `train.txt`, `valid.txt` and `test.txt`.
    pub fn write_to_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        self.kg.write_triples(&dir.join("kg.tsv"))?;
        write_qa(&dir.join("train.txt"), &self.kg, &self.train)?;
        write_qa(&dir.join("valid.txt"), &self.kg, &self.valid)?;
        write_qa(&dir.join("test.txt"), &self.kg, &self.test)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_determinism() {
        let a = generate_toy(&ToyConfig::default()).unwrap();
        let b = generate_toy(&ToyConfig::default()).unwrap();
        assert_eq!(a.kg.triples(), b.kg.triples());
        assert_eq!(a.test, b.test);
        assert_eq!(a.kg.num_relations(), 8);
        assert!((180..=220).contains(&a.kg.num_entities()));
        let n = a.train.len() + a.valid.len() + a.test.len();
        assert_eq!(a.train.len(), n * 8 / 10);
        for q in a.train.iter().chain(&a.test) {
            assert!(!q.answers.contains(&q.topic_entities[0]));
        }
    }

    #[test]
    fn two_hop_answers_follow_chain() {
        let t = generate_toy(&ToyConfig::default()).unwrap();
        let q = t.test.iter().find(|q| q.hop_annotation == Some(2)).unwrap();
        assert!(!q.answers.is_empty());
    }
}

//! Seeded synthetic tweet streams with known labels, used by the examples,
//! the bundled fixture and the test suites.
//!
//! Travel tweets name a transport mode in a sentence frame that background
//! tweets share, so the mode word (plus an optional travel context phrase)
//! is the only lexical signal. Each mode has a formal word, which the
//! keyword bootstrap finds, and a slang variant, which it does not.

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;

use crate::classify::Label;
use crate::corpus::{GeoBox, GeoPoint, Tweet};
use crate::textprep::TokenizedDoc;

/// (article, formal spellings, slang variant)
pub const TRANSPORT_MODES: [(&str, &[&str], &str); 7] = [
    ("o", &["ônibus", "onibus"], "busão"),
    ("a", &["bicicleta"], "magrela"),
    ("o", &["carro"], "carango"),
    ("a", &["moto"], "motoca"),
    ("o", &["táxi", "taxi"], "uber"),
    ("o", &["metrô", "metro"], "metrozão"),
    ("o", &["trem"], "trenzão"),
];

const BACKGROUND_NOUNS: [(&str, &str); 20] = [
    ("o", "celular"),
    ("o", "café"),
    ("o", "jogo"),
    ("o", "filme"),
    ("o", "show"),
    ("a", "pizza"),
    ("a", "praia"),
    ("a", "festa"),
    ("a", "aula"),
    ("a", "cerveja"),
    ("a", "novela"),
    ("a", "prova"),
    ("a", "série"),
    ("a", "música"),
    ("o", "livro"),
    ("o", "cachorro"),
    ("o", "almoço"),
    ("o", "treino"),
    ("o", "sorvete"),
    ("a", "academia"),
];

/// `{a}` is the article, `{x}` the noun; the context phrase, when drawn,
/// follows the noun.
const FRAMES: [&str; 12] = [
    "peguei {a} {x}",
    "esperando {a} {x}",
    "cadê {a} {x}",
    "olha {a} {x}",
    "{a} {x} de hoje",
    "adoro {a} {x}",
    "odeio {a} {x}",
    "saindo com {a} {x}",
    "perdi {a} {x}",
    "mais uma vez {a} {x}",
    "bora de novo {a} {x}",
    "só queria {a} {x}",
];

const TRAVEL_CONTEXT: [&str; 12] = [
    "lotado",
    "atrasado",
    "na parada",
    "na estação",
    "no ponto",
    "no trânsito",
    "engarrafado",
    "pro trabalho",
    "sem passagem",
    "na linha vermelha",
    "na corrida",
    "até o centro",
];

const BACKGROUND_CONTEXT: [&str; 12] = [
    "delícia",
    "incrível",
    "chato",
    "no shopping",
    "em casa",
    "com os amigos",
    "gostoso",
    "lindo demais",
    "top",
    "que saudade",
    "no sofá",
    "pra relaxar",
];

const FILLERS: [&str; 12] = [
    "hoje", "agora", "gente", "sério", "kkk", "aff", "nossa", "bom dia", "que dia", "enfim", "vish", "ufa",
];

/// Background tweets that use a bootstrap term in a non-transport sense.
const FALSE_FRIENDS: [&str; 4] = [
    "esse trem é bom demais",
    "que trem doido",
    "meu moto g quebrou de novo",
    "carro de som na rua de manhã",
];

const HASHTAGS: [&str; 6] = ["#rio", "#sp", "#partiu", "#sextou", "#segue", "#vida"];

const OTHER_LANGUAGES: [&str; 3] = ["en", "es", "und"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoMix {
    pub precise: f64,
    pub place: f64,
    pub outside: f64,
    pub none: f64,
}

impl GeoMix {
    pub fn all_precise() -> Self {
        GeoMix {
            precise: 1.0,
            place: 0.0,
            outside: 0.0,
            none: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_tweets: usize,
    pub travel_fraction: f64,
    /// Share of travel tweets that use the slang variant of their mode.
    pub slang_fraction: f64,
    /// Chance a tweet carries its class-specific context phrase.
    pub context_probability: f64,
    /// Chance a background tweet is a false-friend sentence.
    pub false_friend_probability: f64,
    /// Chance of each surface perturbation (case, letter runs, URL, ...).
    pub noise_probability: f64,
    pub city: GeoBox,
    /// Points that precise coordinates cluster around.
    pub hotspots: Vec<GeoPoint>,
    pub geo: GeoMix,
    pub other_language_probability: f64,
    /// Pareto tail index of per-user activity.
    pub user_alpha: f64,
    pub start: DateTime<Utc>,
    pub days: i64,
    pub first_id: u64,
    pub seed: u64,
}

impl SynthConfig {
    /// Portuguese tweets, all with precise coordinates inside the city.
    pub fn clean(n_tweets: usize, seed: u64) -> Self {
        SynthConfig {
            n_tweets,
            travel_fraction: 0.45,
            slang_fraction: 0.10,
            context_probability: 0.5,
            false_friend_probability: 0.03,
            noise_probability: 0.1,
            city: GeoBox::rio_de_janeiro(),
            hotspots: rio_stations(),
            geo: GeoMix::all_precise(),
            other_language_probability: 0.0,
            user_alpha: 0.5,
            start: Utc.with_ymd_and_hms(2017, 3, 1, 0, 0, 0).unwrap(),
            days: 61,
            first_id: 1,
            seed,
        }
    }

    /// Adds foreign-language records and place-only, outside and
    /// geo-less records to [`SynthConfig::clean`].
    pub fn realistic(n_tweets: usize, seed: u64) -> Self {
        SynthConfig {
            geo: GeoMix {
                precise: 0.8,
                place: 0.1,
                outside: 0.05,
                none: 0.05,
            },
            other_language_probability: 0.08,
            ..SynthConfig::clean(n_tweets, seed)
        }
    }
}

pub fn rio_stations() -> Vec<GeoPoint> {
    [(-22.9035, -43.1907), (-22.9121, -43.2302), (-22.9068, -43.1772), (-22.9845, -43.1986)]
        .into_iter()
        .map(|(lat, lon)| GeoPoint::new(lat, lon).expect("valid station"))
        .collect()
}

pub fn sao_paulo_stations() -> Vec<GeoPoint> {
    [(-23.5503, -46.6339), (-23.5347, -46.6354), (-23.5553, -46.6622), (-23.5266, -46.6672)]
        .into_iter()
        .map(|(lat, lon)| GeoPoint::new(lat, lon).expect("valid station"))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthTweet {
    pub tweet: Tweet,
    pub label: Label,
    /// Travel tweet using a slang mode word.
    pub slang: bool,
}

/// Draws a discrete Pareto activity count, at least 1 and at most `cap`.
pub fn pareto_activity<R: Rng>(rng: &mut R, alpha: f64, cap: u64) -> u64 {
    let u: f64 = 1.0 - rng.gen::<f64>();
    (u.powf(-1.0 / alpha).floor() as u64).clamp(1, cap)
}

/// One tweet per unit of activity for `n_users` users with Pareto activity.
/// Only `user_id` and `created_at` carry information.
pub fn power_law_user_corpus(n_users: usize, alpha: f64, seed: u64) -> Vec<Tweet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = Utc.with_ymd_and_hms(2017, 3, 1, 0, 0, 0).unwrap();
    let mut out = Vec::new();
    for user in 0..n_users as u64 {
        for _ in 0..pareto_activity(&mut rng, alpha, 5000) {
            out.push(Tweet {
                id: out.len() as u64 + 1,
                text: "oi".into(),
                lang: "pt".into(),
                created_at: start + Duration::seconds(rng.gen_range(0..61 * 86_400)),
                coordinates: None,
                place_box: None,
                place_name: None,
                user_id: Some(user + 1),
            });
        }
    }
    out
}

struct Generator<'a> {
    cfg: &'a SynthConfig,
    rng: ChaCha8Rng,
    jitter: Normal<f64>,
}

impl Generator<'_> {
    fn chance(&mut self, p: f64) -> bool {
        p > 0.0 && self.rng.gen_bool(p.min(1.0))
    }

    fn pick<'b>(&mut self, items: &[&'b str]) -> &'b str {
        items[self.rng.gen_range(0..items.len())]
    }

    fn sentence(&mut self, article: &str, noun: &str, context: Option<&str>) -> String {
        let frame = self.pick(&FRAMES);
        let mut s = frame.replace("{a}", article).replace("{x}", noun);
        if let Some(c) = context {
            let insert_at = s.find(noun).map(|i| i + noun.len()).unwrap_or(s.len());
            s.insert_str(insert_at, &format!(" {c}"));
        }
        if self.chance(0.5) {
            let f = self.pick(&FILLERS);
            s = if self.chance(0.5) { format!("{f} {s}") } else { format!("{s} {f}") };
        }
        s
    }

    fn travel_text(&mut self, slang: bool) -> String {
        let (article, formal, slang_word) = TRANSPORT_MODES[self.rng.gen_range(0..TRANSPORT_MODES.len())];
        let noun = if slang { slang_word } else { formal[self.rng.gen_range(0..formal.len())] };
        let context = self.chance(self.cfg.context_probability).then(|| self.pick(&TRAVEL_CONTEXT));
        self.sentence(article, noun, context)
    }

    fn background_text(&mut self) -> String {
        if self.chance(self.cfg.false_friend_probability) {
            return self.pick(&FALSE_FRIENDS).to_string();
        }
        let (article, noun) = BACKGROUND_NOUNS[self.rng.gen_range(0..BACKGROUND_NOUNS.len())];
        let context = self.chance(self.cfg.context_probability).then(|| self.pick(&BACKGROUND_CONTEXT));
        self.sentence(article, noun, context)
    }

    fn perturb(&mut self, text: String) -> String {
        let p = self.cfg.noise_probability;
        let mut words: Vec<String> = text.split(' ').map(str::to_string).collect();
        if self.chance(p) {
            let i = self.rng.gen_range(0..words.len());
            if let Some(last) = words[i].chars().last() {
                let extra = self.rng.gen_range(2..7);
                words[i].extend(std::iter::repeat_n(last, extra));
            }
        }
        if self.chance(p) {
            let i = self.rng.gen_range(0..words.len());
            words[i] = words[i].to_uppercase();
        }
        let mut text = words.join(" ");
        if self.chance(p) {
            text = text.to_uppercase();
        }
        if self.chance(p) {
            let mark = self.pick(&["!", "!!", "?", "...", " :)"]);
            text.push_str(mark);
        }
        if self.chance(p) {
            let handle = self.rng.gen_range(1..500);
            text = format!("@user{handle} {text}");
        }
        if self.chance(p) {
            let tag = self.pick(&HASHTAGS);
            text = format!("{text} {tag}");
        }
        if self.chance(p) {
            let code: u32 = self.rng.gen();
            text = format!("{text} https://t.co/{code:x}");
        }
        text
    }

    fn point_near(&mut self, travel: bool) -> GeoPoint {
        let city = self.cfg.city;
        let clustered = !self.cfg.hotspots.is_empty() && self.chance(if travel { 0.7 } else { 0.3 });
        loop {
            let (lat, lon) = if clustered {
                let h = self.cfg.hotspots[self.rng.gen_range(0..self.cfg.hotspots.len())];
                (h.lat() + self.jitter.sample(&mut self.rng), h.lon() + self.jitter.sample(&mut self.rng))
            } else {
                let sw = city.south_west();
                (
                    sw.lat() + self.rng.gen::<f64>() * city.lat_span(),
                    sw.lon() + self.rng.gen::<f64>() * city.lon_span(),
                )
            };
            if let Ok(p) = GeoPoint::new(lat, lon) {
                if city.contains(p) {
                    return p;
                }
            }
        }
    }

    /// Coordinates, place box and place name for one record.
    fn geo(&mut self, travel: bool) -> (Option<GeoPoint>, Option<GeoBox>, Option<String>) {
        let g = self.cfg.geo;
        let weights = [g.precise, g.place, g.outside, g.none];
        let which = WeightedIndex::new(weights)
            .map(|w| w.sample(&mut self.rng))
            .unwrap_or(0);
        match which {
            0 => (Some(self.point_near(travel)), None, None),
            1 => {
                let c = self.point_near(travel);
                let half = 0.01;
                let b = GeoBox::from_corners(c.lat() - half, c.lon() - half, c.lat() + half, c.lon() + half)
                    .expect("small box around an in-city point");
                (None, Some(b), Some("bairro".into()))
            }
            2 => {
                let sw = self.cfg.city.south_west();
                let p = GeoPoint::new(sw.lat() - 1.0 - self.rng.gen::<f64>(), sw.lon() - self.rng.gen::<f64>())
                    .expect("point south-west of the city");
                (Some(p), None, None)
            }
            _ => (None, None, None),
        }
    }
}

fn assign_users(rng: &mut ChaCha8Rng, n: usize, alpha: f64) -> Vec<u64> {
    let mut users = Vec::with_capacity(n);
    let mut next = 1u64;
    while users.len() < n {
        let a = pareto_activity(rng, alpha, 2000);
        users.extend(std::iter::repeat_n(next, a as usize));
        next += 1;
    }
    users.truncate(n);
    users.shuffle(rng);
    users
}

/// Generates `cfg.n_tweets` labeled tweets with ids from `cfg.first_id`.
pub fn generate(cfg: &SynthConfig) -> Vec<SynthTweet> {
    let mut gen = Generator {
        cfg,
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        jitter: Normal::new(0.0, 0.004).expect("valid deviation"),
    };
    let users = assign_users(&mut gen.rng, cfg.n_tweets, cfg.user_alpha);
    let span = (cfg.days.max(1) * 86_400) as u64;
    (0..cfg.n_tweets)
        .map(|i| {
            let travel = gen.chance(cfg.travel_fraction);
            let slang = travel && gen.chance(cfg.slang_fraction);
            let text = if travel { gen.travel_text(slang) } else { gen.background_text() };
            let text = gen.perturb(text);
            let lang = if gen.chance(cfg.other_language_probability) {
                gen.pick(&OTHER_LANGUAGES).to_string()
            } else if gen.chance(0.2) {
                "pt-BR".to_string()
            } else {
                "pt".to_string()
            };
            let (coordinates, place_box, place_name) = gen.geo(travel);
            let offset = gen.rng.gen_range(0..span) as i64;
            SynthTweet {
                tweet: Tweet {
                    id: cfg.first_id + i as u64,
                    text,
                    lang,
                    created_at: cfg.start + Duration::seconds(offset),
                    coordinates,
                    place_box,
                    place_name,
                    user_id: Some(users[i]),
                },
                label: Label::from_positive(travel),
                slang,
            }
        })
        .collect()
}

/// A corpus where each planted pair of words occurs in one shared set of
/// contexts, used to check that embeddings place the pair close together.
#[derive(Debug, Clone)]
pub struct PlantedCorpus {
    pub docs: Vec<TokenizedDoc>,
    pub pairs: Vec<(String, String)>,
    pub words: Vec<String>,
}

pub fn planted_synonym_corpus(n_groups: usize, sentences_per_group: usize, seed: u64) -> PlantedCorpus {
    const CONTEXTS: usize = 8;
    const SHARED: usize = 20;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<(String, String)> = (0..n_groups).map(|g| (format!("alvo{g}a"), format!("alvo{g}b"))).collect();
    let ctx = |g: usize, k: usize| format!("ctx{g}x{k}");
    let shared = |k: usize| format!("comum{k}");
    let mut docs = Vec::with_capacity(n_groups * sentences_per_group);
    for i in 0..n_groups * sentences_per_group {
        let g = i % n_groups;
        let target = if rng.gen_bool(0.5) { &pairs[g].0 } else { &pairs[g].1 };
        let mut tokens = vec![shared(rng.gen_range(0..SHARED))];
        for _ in 0..2 {
            tokens.push(ctx(g, rng.gen_range(0..CONTEXTS)));
        }
        tokens.push(target.clone());
        for _ in 0..2 {
            tokens.push(ctx(g, rng.gen_range(0..CONTEXTS)));
        }
        tokens.push(shared(rng.gen_range(0..SHARED)));
        docs.push(TokenizedDoc {
            tweet_id: i as u64,
            tokens,
        });
    }
    let mut words: Vec<String> = pairs.iter().flat_map(|(a, b)| [a.clone(), b.clone()]).collect();
    words.extend((0..n_groups).flat_map(|g| (0..CONTEXTS).map(move |k| ctx(g, k))));
    words.extend((0..SHARED).map(shared));
    PlantedCorpus { docs, pairs, words }
}

//! Seeded generator for a small Dutch-like benchmark corpus: riddle jokes,
//! news headlines, proverbs, a gold-tagged treebank and word vectors.
//!
//! Joke content words are drawn independently from shared Zipf-weighted
//! lexicons, so a joke carries no signal beyond its template and word
//! choice. News and proverbs use their own vocabulary.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neural::EmbeddingMatrix;
use crate::seed::derive_seed;
use crate::tagger::{to_conllu, TaggedSentence, PUNCT};

const JOKE_NOUNS_DE: &[&str] = &[
    "kat",
    "hond",
    "koe",
    "kip",
    "eend",
    "vis",
    "muis",
    "olifant",
    "giraf",
    "aap",
    "leeuw",
    "tijger",
    "beer",
    "slak",
    "kikker",
    "spin",
    "mier",
    "bij",
    "vlieg",
    "uil",
    "haan",
    "geit",
    "ezel",
    "zebra",
    "krokodil",
    "pinguin",
    "walvis",
    "haai",
    "kameel",
    "banaan",
    "appel",
    "peer",
    "tomaat",
    "wortel",
    "kaas",
    "soep",
    "taart",
    "pannenkoek",
    "boterham",
    "aardappel",
    "ui",
    "citroen",
    "druif",
    "muur",
    "deur",
    "tafel",
    "stoel",
    "lamp",
    "kast",
    "trap",
    "fiets",
    "auto",
    "trein",
    "boot",
    "fles",
    "pan",
    "lepel",
    "vork",
    "jas",
    "broek",
    "sok",
    "schoen",
    "hoed",
    "bril",
    "klok",
    "telefoon",
    "televisie",
    "radio",
    "tandarts",
    "dokter",
    "juf",
    "meester",
    "bakker",
    "slager",
    "boer",
    "piraat",
    "heks",
    "koning",
    "prinses",
    "ridder",
    "clown",
    "tovenaar",
    "sneeuwpop",
    "vampier",
    "robot",
    "dinosaurus",
    "tand",
    "neus",
    "voet",
    "hand",
    "buik",
    "kam",
    "zeep",
    "emmer",
    "bezem",
    "ladder",
    "stoep",
    "tuin",
    "wolk",
    "zon",
    "maan",
    "ster",
    "regenboog",
    "keuken",
    "winkel",
    "kapper",
    "oma",
    "opa",
    "sticker",
    "worst",
    "pizza",
    "wasmachine",
    "stofzuiger",
    "paraplu",
    "tandenborstel",
    "kabouter",
    "reus",
    "draak",
    "zeemeermin",
    "kangoeroe",
    "papegaai",
    "egel",
    "vos",
    "wolf",
    "mol",
    "ekster",
    "kreeft",
    "garnaal",
    "sla",
    "komkommer",
    "paprika",
    "prei",
    "bloem",
    "boom",
    "plant",
];

const JOKE_NOUNS_HET: &[&str] = &[
    "paard",
    "varken",
    "schaap",
    "konijn",
    "kuiken",
    "ei",
    "brood",
    "glas",
    "bord",
    "mes",
    "bed",
    "raam",
    "dak",
    "huis",
    "boek",
    "potlood",
    "schrift",
    "hoofd",
    "been",
    "oog",
    "strand",
    "bos",
    "kasteel",
    "spel",
    "feest",
    "cadeau",
    "lied",
    "fornuis",
    "hek",
    "touw",
    "ijsje",
    "snoepje",
    "kopje",
    "vliegtuig",
    "nijlpaard",
    "stinkdier",
    "eekhoorntje",
    "zwembad",
    "kussen",
    "tapijt",
    "spook",
    "monster",
    "vogeltje",
    "lampje",
    "wiel",
    "stuur",
    "toilet",
    "ijsblokje",
];

const JOKE_ADJECTIVES: &[&str] = &[
    "groen",
    "rood",
    "geel",
    "blauw",
    "paars",
    "oranje",
    "zwart",
    "wit",
    "roze",
    "bruin",
    "grijs",
    "klein",
    "groot",
    "dik",
    "dun",
    "lang",
    "kort",
    "rond",
    "plat",
    "zacht",
    "hard",
    "nat",
    "droog",
    "warm",
    "koud",
    "heet",
    "snel",
    "traag",
    "lui",
    "boos",
    "blij",
    "verdrietig",
    "moe",
    "gek",
    "dom",
    "slim",
    "raar",
    "vies",
    "lekker",
    "zoet",
    "zuur",
    "zout",
    "stil",
    "luid",
    "oud",
    "jong",
    "nieuw",
    "scheef",
    "kaal",
    "harig",
    "glad",
    "ziek",
    "bang",
    "stout",
    "lief",
    "gierig",
    "vrolijk",
    "zenuwachtig",
    "stinkend",
    "plakkerig",
    "kriebelig",
    "wiebelig",
    "knapperig",
    "slaperig",
    "hongerig",
    "dorstig",
    "verliefd",
    "eenzaam",
    "beroemd",
    "onzichtbaar",
];

/// Frame verbs of the templates come first: common verbs also fill free slots.
const JOKE_VERBS: &[&str] = &[
    "zegt",
    "komt",
    "zit",
    "doet",
    "kruist",
    "plakt",
    "springt",
    "zwemt",
    "vliegt",
    "loopt",
    "rent",
    "zingt",
    "danst",
    "fluit",
    "blaft",
    "miauwt",
    "kakelt",
    "kwaakt",
    "telefoneert",
    "slaapt",
    "snurkt",
    "eet",
    "drinkt",
    "kookt",
    "bakt",
    "leest",
    "schrijft",
    "rekent",
    "tekent",
    "fietst",
    "rijdt",
    "klimt",
    "kruipt",
    "huilt",
    "lacht",
    "giechelt",
    "niest",
    "hoest",
    "wiebelt",
    "draait",
    "rolt",
    "stuitert",
    "praat",
    "fluistert",
    "roept",
    "zucht",
    "poetst",
    "wast",
    "veegt",
    "kamt",
    "breit",
    "naait",
    "timmert",
    "schildert",
    "gooit",
    "vangt",
    "trapt",
    "duwt",
    "trekt",
    "zoekt",
    "verstopt",
    "kietelt",
    "knipoogt",
    "piept",
    "kraakt",
    "zoemt",
    "brult",
    "hinnikt",
    "knort",
    "tikt",
    "zwaait",
    "glijdt",
    "struikelt",
    "smelt",
    "stinkt",
    "glimt",
    "boert",
    "jongleert",
    "surft",
    "skiet",
    "schaatst",
    "gorgelt",
    "mompelt",
];

const JOKE_PREPOSITIONS: &[&str] = &[
    "aan", "op", "in", "onder", "naast", "achter", "over", "door", "bij", "tegen",
];

const JOKE_NAMES: &[&str] = &[
    "Jantje", "Pietje", "Kermit", "Jan", "Piet", "Marie", "Anna", "Bram", "Sanne", "Tom", "Lisa",
    "Fleur", "Daan", "Sem", "Noor", "Ruben", "Femke", "Joris", "Saar", "Milan",
];

const NEWS_NOUNS: &[&str] = &[
    "belasting",
    "rente",
    "inflatie",
    "verkiezing",
    "staking",
    "brand",
    "begroting",
    "wet",
    "uitspraak",
    "zorg",
    "economie",
    "werkloosheid",
    "woningmarkt",
    "energieprijs",
    "stikstofregel",
    "vakbond",
    "werkgever",
    "universiteit",
    "studiefinanciering",
    "asielopvang",
    "grens",
    "file",
    "snelweg",
    "vertraging",
    "storing",
    "overstroming",
    "dijk",
    "beurs",
    "koers",
    "bank",
    "subsidie",
    "bezuiniging",
    "hervorming",
    "coalitie",
    "oppositie",
    "motie",
    "enquete",
    "fraude",
    "rechtszaak",
    "boete",
    "huurprijs",
    "pensioenregeling",
    "zorgpremie",
    "luchtkwaliteit",
    "windmolen",
    "vergunning",
    "bouwplaats",
    "nieuwbouwwijk",
    "ambulance",
    "brandweer",
    "lerarentekort",
    "cao",
    "loonsverhoging",
    "exportcijfer",
    "landbouw",
    "visserij",
    "veiligheid",
    "criminaliteit",
    "drugshandel",
    "aanslag",
    "demonstratie",
    "onderhandeling",
    "gemeenteraad",
    "referendum",
    "kiezer",
    "peiling",
    "investering",
    "faillissement",
];

const NEWS_ACTORS: &[&str] = &[
    "Kabinet",
    "Gemeente",
    "Politie",
    "Minister",
    "Rechter",
    "Provincie",
    "Brandweer",
    "Vakbond",
    "Universiteit",
    "Ziekenhuis",
    "Burgemeester",
    "Staatssecretaris",
    "Toezichthouder",
    "Rijkswaterstaat",
    "Tweede Kamer",
    "Raad",
    "Onderzoeksraad",
    "Inspectie",
];

const NEWS_VERBS: &[&str] = &[
    "verhoogt",
    "verlaagt",
    "schrapt",
    "presenteert",
    "bespreekt",
    "steunt",
    "bekritiseert",
    "onderzoekt",
    "eist",
    "sluit",
    "opent",
    "verwacht",
    "belooft",
    "blokkeert",
    "ontslaat",
    "verbiedt",
    "beperkt",
    "verdubbelt",
    "halveert",
    "evalueert",
    "herziet",
    "financiert",
    "controleert",
    "vertraagt",
    "versnelt",
    "verlengt",
];

const NEWS_ADJECTIVES: &[&str] = &[
    "nieuwe",
    "hogere",
    "lagere",
    "omstreden",
    "landelijke",
    "regionale",
    "Europese",
    "extra",
    "forse",
    "tijdelijke",
    "structurele",
    "strengere",
    "grootschalige",
    "onverwachte",
    "financiele",
    "definitieve",
    "voorlopige",
    "gezamenlijke",
    "jaarlijkse",
    "miljoenen",
];

const NEWS_PLACES: &[&str] = &[
    "Amsterdam",
    "Rotterdam",
    "Utrecht",
    "Eindhoven",
    "Groningen",
    "Tilburg",
    "Almere",
    "Breda",
    "Nijmegen",
    "Arnhem",
    "Zwolle",
    "Leiden",
    "Maastricht",
    "Brabant",
    "Limburg",
    "Friesland",
    "Zeeland",
    "Drenthe",
    "Haarlem",
    "Delft",
];

const PROVERB_NOUNS_DE: &[&str] = &[
    "appel", "boom", "kat", "hond", "aap", "koe", "kraai", "wolf", "vos", "pot", "ketel", "stok",
    "klok", "klepel", "kar", "weg", "tijd", "haast", "rust", "les", "schade", "schande",
    "wijsheid", "kunst", "liefde", "honger",
];

const PROVERB_NOUNS_HET: &[&str] = &[
    "paard", "schaap", "ijzer", "water", "vuur", "woord", "zwijgen", "geld", "werk", "huis",
];

const PROVERB_VERBS: &[&str] = &[
    "valt", "bijt", "blaft", "zwijgt", "spreekt", "wint", "verliest", "wacht", "zoekt", "vindt",
    "graaft", "smeedt", "roest", "breekt", "buigt", "eindigt", "begint", "komt", "gaat", "rijdt",
];

const PROVERB_ADJECTIVES: &[&str] = &[
    "oud", "wijs", "stil", "diep", "hol", "heet", "gegeven", "vroeg", "laat", "goed", "slecht",
    "zacht", "hard", "eigen",
];

/// Weighted draws with weight `1 / rank^exponent`.
struct Zipf {
    words: Vec<&'static str>,
    dist: WeightedIndex<f64>,
}

impl Zipf {
    fn new(words: &[&'static str], exponent: f64) -> Self {
        let weights: Vec<f64> = (1..=words.len())
            .map(|r| 1.0 / (r as f64).powf(exponent))
            .collect();
        Zipf {
            words: words.to_vec(),
            dist: WeightedIndex::new(weights).expect("non-empty lexicon"),
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> &'static str {
        self.words[self.dist.sample(rng)]
    }
}

/// Nouns of both genders; draws come with the matching definite article.
struct NounLexicon {
    zipf: Zipf,
    het: BTreeSet<&'static str>,
}

impl NounLexicon {
    fn new(de: &[&'static str], het: &[&'static str], exponent: f64) -> Self {
        NounLexicon {
            zipf: Zipf::new(&interleave(de, het), exponent),
            het: het.iter().copied().collect(),
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> (&'static str, &'static str) {
        let n = self.zipf.draw(rng);
        (if self.het.contains(n) { "het" } else { "de" }, n)
    }
}

/// Interleaves two lists so neither gender dominates the head of the Zipf ranking.
fn interleave(a: &[&'static str], b: &[&'static str]) -> Vec<&'static str> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let ratio = (a.len() / b.len().max(1)).max(1);
    let mut bi = b.iter();
    for (i, w) in a.iter().enumerate() {
        out.push(*w);
        if (i + 1) % ratio == 0 {
            if let Some(x) = bi.next() {
                out.push(x);
            }
        }
    }
    out.extend(bi);
    out
}

#[derive(Default)]
struct Sentence(Vec<(String, &'static str)>);

impl Sentence {
    fn w(&mut self, word: &str, tag: &'static str) -> &mut Self {
        self.0.push((word.to_string(), tag));
        self
    }

    fn p(&mut self, mark: &str) -> &mut Self {
        self.w(mark, PUNCT)
    }

    fn words(&mut self, words: &str, tags: &[&'static str]) -> &mut Self {
        for (w, t) in words.split(' ').zip(tags) {
            self.w(w, t);
        }
        self
    }

    fn finish(mut self) -> TaggedSentence {
        let mut capitalize = true;
        for (w, tag) in self.0.iter_mut() {
            if capitalize && *tag != PUNCT {
                let mut cs = w.chars();
                if let Some(first) = cs.next() {
                    *w = first.to_uppercase().chain(cs).collect();
                }
                capitalize = false;
            }
            if *tag == PUNCT && matches!(w.as_str(), "?" | "!" | ".") {
                capitalize = true;
            }
        }
        self.0
            .into_iter()
            .map(|(w, t)| (w, t.to_string()))
            .collect()
    }
}

/// Surface text of a tagged sentence: punctuation attaches to the previous word.
pub fn detokenize(sentence: &TaggedSentence) -> String {
    let mut out = String::new();
    for (form, tag) in sentence {
        if !out.is_empty() && tag != PUNCT {
            out.push(' ');
        }
        out.push_str(form);
    }
    out
}

struct Lexicons {
    joke_nouns: NounLexicon,
    joke_adj: Zipf,
    joke_verbs: Zipf,
    joke_preps: Zipf,
    names: Zipf,
    news_nouns: Zipf,
    news_actors: Zipf,
    news_verbs: Zipf,
    news_adj: Zipf,
    places: Zipf,
    prov_nouns: NounLexicon,
    prov_verbs: Zipf,
    prov_adj: Zipf,
}

impl Lexicons {
    fn new(exponent: f64) -> Self {
        Lexicons {
            joke_nouns: NounLexicon::new(JOKE_NOUNS_DE, JOKE_NOUNS_HET, exponent),
            joke_adj: Zipf::new(JOKE_ADJECTIVES, exponent),
            joke_verbs: Zipf::new(JOKE_VERBS, exponent),
            joke_preps: Zipf::new(JOKE_PREPOSITIONS, exponent),
            names: Zipf::new(JOKE_NAMES, exponent),
            news_nouns: Zipf::new(NEWS_NOUNS, exponent),
            news_actors: Zipf::new(NEWS_ACTORS, exponent),
            news_verbs: Zipf::new(NEWS_VERBS, exponent),
            news_adj: Zipf::new(NEWS_ADJECTIVES, exponent),
            places: Zipf::new(NEWS_PLACES, exponent),
            prov_nouns: NounLexicon::new(PROVERB_NOUNS_DE, PROVERB_NOUNS_HET, exponent),
            prov_verbs: Zipf::new(PROVERB_VERBS, exponent),
            prov_adj: Zipf::new(PROVERB_ADJECTIVES, exponent),
        }
    }

    fn joke(&self, rng: &mut ChaCha8Rng) -> TaggedSentence {
        let mut s = Sentence::default();
        let n = |rng: &mut ChaCha8Rng| self.joke_nouns.draw(rng);
        match rng.gen_range(0..10) {
            0 => {
                let (art, noun) = n(rng);
                s.words("wat is", &["PRON", "AUX"])
                    .w(self.joke_adj.draw(rng), "ADJ")
                    .w("en", "CCONJ");
                s.w(self.joke_verbs.draw(rng), "VERB")
                    .w(self.joke_preps.draw(rng), "ADP")
                    .w(art, "DET")
                    .w(noun, "NOUN");
                s.p("?");
                if rng.gen_bool(0.5) {
                    let (art, noun) = n(rng);
                    s.w(self.names.draw(rng), "PROPN")
                        .w(art, "DET")
                        .w(noun, "NOUN");
                } else {
                    s.w("een", "DET")
                        .w(self.joke_adj.draw(rng), "ADJ")
                        .w(n(rng).1, "NOUN");
                }
                s.p("!");
            }
            1 => {
                s.words("hoe noem je een", &["ADV", "VERB", "PRON", "DET"])
                    .w(n(rng).1, "NOUN")
                    .w("die", "PRON");
                s.w(self.joke_verbs.draw(rng), "VERB").p("?");
                s.w("een", "DET")
                    .w(self.joke_adj.draw(rng), "ADJ")
                    .w(n(rng).1, "NOUN")
                    .p("!");
            }
            2 => {
                let (a1, n1) = n(rng);
                let (a2, n2) = n(rng);
                let (a3, n3) = n(rng);
                s.w("waarom", "ADV")
                    .w(self.joke_verbs.draw(rng), "VERB")
                    .w(a1, "DET")
                    .w(n1, "NOUN");
                s.w(self.joke_preps.draw(rng), "ADP")
                    .w(a2, "DET")
                    .w(n2, "NOUN")
                    .p("?");
                s.w("omdat", "SCONJ")
                    .w(a3, "DET")
                    .w(n3, "NOUN")
                    .w(self.joke_adj.draw(rng), "ADJ")
                    .w("was", "AUX")
                    .p("!");
            }
            3 => {
                s.words("wat zegt de ene", &["PRON", "VERB", "DET", "ADJ"])
                    .w(n(rng).1, "NOUN");
                s.words("tegen de andere", &["ADP", "DET", "ADJ"]).p("?");
                s.w("jij", "PRON")
                    .w(self.joke_verbs.draw(rng), "VERB")
                    .w(self.joke_preps.draw(rng), "ADP");
                s.w("mijn", "PRON").w(n(rng).1, "NOUN").p("!");
            }
            4 => {
                let name = self.names.draw(rng);
                let (a1, n1) = n(rng);
                s.w(name, "PROPN")
                    .w("komt", "VERB")
                    .w("bij", "ADP")
                    .w(a1, "DET")
                    .w(n1, "NOUN")
                    .p(".");
                s.w("zegt", "VERB")
                    .w(a1, "DET")
                    .w(n1, "NOUN")
                    .p(":")
                    .w("waarom", "ADV");
                s.w(self.joke_verbs.draw(rng), "VERB")
                    .w("jij", "PRON")
                    .w("zo", "ADV")
                    .w(self.joke_adj.draw(rng), "ADJ")
                    .p("?");
                s.w("zegt", "VERB")
                    .w(name, "PROPN")
                    .p(":")
                    .w("omdat", "SCONJ")
                    .w("mijn", "PRON")
                    .w(n(rng).1, "NOUN");
                s.w(self.joke_verbs.draw(rng), "VERB").p("!");
            }
            5 => {
                let (art, noun) = n(rng);
                s.words("het is", &["PRON", "AUX"])
                    .w(self.joke_adj.draw(rng), "ADJ")
                    .p(",");
                s.w("het", "PRON")
                    .w(self.joke_verbs.draw(rng), "VERB")
                    .w("en", "CCONJ")
                    .w("het", "PRON")
                    .w("zit", "VERB");
                s.w(self.joke_preps.draw(rng), "ADP")
                    .w(art, "DET")
                    .w(noun, "NOUN")
                    .p(".");
                s.words("wat is het", &["PRON", "AUX", "PRON"])
                    .p("?")
                    .w("een", "DET")
                    .w(n(rng).1, "NOUN")
                    .p("!");
            }
            6 => {
                s.w("zegt", "VERB")
                    .w("een", "DET")
                    .w(n(rng).1, "NOUN")
                    .w("tegen", "ADP")
                    .w("een", "DET")
                    .w(n(rng).1, "NOUN");
                s.p(":")
                    .words("ik ben niet", &["PRON", "AUX", "ADV"])
                    .w(self.joke_adj.draw(rng), "ADJ")
                    .p(",");
                s.words("ik ben een", &["PRON", "AUX", "DET"])
                    .w(n(rng).1, "NOUN")
                    .p("!");
            }
            7 => {
                s.words(
                    "wat krijg je als je een",
                    &["PRON", "VERB", "PRON", "SCONJ", "PRON", "DET"],
                )
                .w(n(rng).1, "NOUN");
                s.w("met", "ADP")
                    .w("een", "DET")
                    .w(n(rng).1, "NOUN")
                    .w("kruist", "VERB")
                    .p("?");
                s.w("een", "DET")
                    .w(self.joke_adj.draw(rng), "ADJ")
                    .w(n(rng).1, "NOUN")
                    .w("die", "PRON");
                s.w(self.joke_verbs.draw(rng), "VERB").p("!");
            }
            8 => {
                let (a1, n1) = n(rng);
                s.words("wat doet een", &["PRON", "VERB", "DET"])
                    .w(n(rng).1, "NOUN")
                    .w(self.joke_preps.draw(rng), "ADP");
                s.w(a1, "DET")
                    .w(n1, "NOUN")
                    .p("?")
                    .w(self.joke_verbs.draw(rng), "VERB")
                    .p("!");
            }
            _ => {
                s.w("er", "ADV")
                    .w("zit", "VERB")
                    .w("een", "DET")
                    .w(n(rng).1, "NOUN")
                    .w(self.joke_preps.draw(rng), "ADP");
                s.w("een", "DET")
                    .w(n(rng).1, "NOUN")
                    .p(".")
                    .w("komt", "VERB")
                    .w("er", "ADV")
                    .w("een", "DET");
                s.w(n(rng).1, "NOUN")
                    .w("langs", "ADV")
                    .w("en", "CCONJ")
                    .w("zegt", "VERB")
                    .p(":")
                    .w("hee", "INTJ")
                    .p(",");
                s.w("jij", "PRON")
                    .w(self.joke_verbs.draw(rng), "VERB")
                    .w("wel", "ADV")
                    .w("erg", "ADV");
                s.w(self.joke_adj.draw(rng), "ADJ").p("!");
            }
        }
        s.finish()
    }

    fn news(&self, rng: &mut ChaCha8Rng) -> TaggedSentence {
        let mut s = Sentence::default();
        let actor = |s: &mut Sentence, rng: &mut ChaCha8Rng| {
            for w in self.news_actors.draw(rng).split(' ') {
                s.w(
                    w,
                    if w.chars().next().is_some_and(char::is_uppercase) {
                        "PROPN"
                    } else {
                        "NOUN"
                    },
                );
            }
        };
        match rng.gen_range(0..6) {
            0 => {
                actor(&mut s, rng);
                s.w(self.news_verbs.draw(rng), "VERB")
                    .w(self.news_adj.draw(rng), "ADJ")
                    .w(self.news_nouns.draw(rng), "NOUN");
                s.w("in", "ADP").w(self.places.draw(rng), "PROPN");
            }
            1 => {
                s.w(&rng.gen_range(2..900).to_string(), "NUM")
                    .w("mensen", "NOUN")
                    .w("getroffen", "VERB")
                    .w("door", "ADP");
                s.w(self.news_nouns.draw(rng), "NOUN")
                    .w("in", "ADP")
                    .w(self.places.draw(rng), "PROPN");
            }
            2 => {
                actor(&mut s, rng);
                s.w("wil", "AUX")
                    .w(self.news_adj.draw(rng), "ADJ")
                    .w(self.news_nouns.draw(rng), "NOUN")
                    .w("voor", "ADP");
                s.w(self.news_nouns.draw(rng), "NOUN");
            }
            3 => {
                s.w(self.news_nouns.draw(rng), "NOUN")
                    .w("in", "ADP")
                    .w(self.places.draw(rng), "PROPN");
                s.w("leidt", "VERB")
                    .w("tot", "ADP")
                    .w(self.news_adj.draw(rng), "ADJ")
                    .w(self.news_nouns.draw(rng), "NOUN");
            }
            4 => {
                actor(&mut s, rng);
                s.w(self.news_verbs.draw(rng), "VERB")
                    .w(self.news_nouns.draw(rng), "NOUN")
                    .p(":");
                s.w(self.news_nouns.draw(rng), "NOUN")
                    .w("blijft", "VERB")
                    .w(self.news_adj.draw(rng), "ADJ");
                s.w("tot", "ADP")
                    .w(&rng.gen_range(2025..2040).to_string(), "NUM");
            }
            _ => {
                s.w("onderzoek", "NOUN")
                    .p(":")
                    .w(self.news_adj.draw(rng), "ADJ")
                    .w(self.news_nouns.draw(rng), "NOUN");
                s.w("kost", "VERB")
                    .w(self.places.draw(rng), "PROPN")
                    .w(&rng.gen_range(2..95).to_string(), "NUM");
                s.w("miljoen", "NUM").w("euro", "NOUN");
            }
        }
        s.finish()
    }

    fn proverb(&self, rng: &mut ChaCha8Rng) -> TaggedSentence {
        let mut s = Sentence::default();
        let n = |rng: &mut ChaCha8Rng| self.prov_nouns.draw(rng);
        match rng.gen_range(0..5) {
            0 => {
                s.w("wie", "PRON")
                    .w(self.prov_verbs.draw(rng), "VERB")
                    .p(",")
                    .w("die", "PRON");
                s.w(self.prov_verbs.draw(rng), "VERB").p(".");
            }
            1 => {
                s.w("beter", "ADJ")
                    .w("een", "DET")
                    .w(self.prov_adj.draw(rng), "ADJ")
                    .w(n(rng).1, "NOUN");
                s.w("dan", "SCONJ")
                    .w("een", "DET")
                    .w(self.prov_adj.draw(rng), "ADJ")
                    .w(n(rng).1, "NOUN")
                    .p(".");
            }
            2 => {
                let (a1, n1) = n(rng);
                let (a2, n2) = n(rng);
                s.w("zo", "ADV")
                    .w(a1, "DET")
                    .w(n1, "NOUN")
                    .p(",")
                    .w("zo", "ADV")
                    .w(a2, "DET")
                    .w(n2, "NOUN")
                    .p(".");
            }
            3 => {
                let (a1, n1) = n(rng);
                let (a2, n2) = n(rng);
                s.w(a1, "DET")
                    .w(n1, "NOUN")
                    .w(self.prov_verbs.draw(rng), "VERB")
                    .w("niet", "ADV")
                    .w("ver", "ADJ");
                s.w("van", "ADP").w(a2, "DET").w(n2, "NOUN").p(".");
            }
            _ => {
                let (a1, n1) = n(rng);
                s.w("een", "DET")
                    .w(self.prov_adj.draw(rng), "ADJ")
                    .w(n(rng).1, "NOUN")
                    .w(self.prov_verbs.draw(rng), "VERB");
                s.w("altijd", "ADV").w(a1, "DET").w(n1, "NOUN").p(".");
            }
        }
        s.finish()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub jokes: usize,
    pub news: usize,
    pub proverbs: usize,
    /// Gold-tagged sentences for tagger training.
    pub treebank_sentences: usize,
    pub embedding_dim: usize,
    pub zipf_exponent: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            jokes: 2000,
            news: 2000,
            proverbs: 150,
            treebank_sentences: 1500,
            embedding_dim: 32,
            zipf_exponent: 0.7,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub jokes: Vec<String>,
    pub news: Vec<String>,
    pub proverbs: Vec<String>,
    pub treebank: Vec<TaggedSentence>,
    pub embeddings: EmbeddingMatrix<f64>,
}

pub const JOKES_FILE: &str = "jokes.txt";
pub const NEWS_FILE: &str = "news.txt";
pub const PROVERBS_FILE: &str = "proverbs.txt";
pub const TREEBANK_FILE: &str = "treebank.conllu";
pub const EMBEDDINGS_FILE: &str = "embeddings.txt";

fn unique(
    n: usize,
    what: &str,
    rng: &mut ChaCha8Rng,
    mut make: impl FnMut(&mut ChaCha8Rng) -> TaggedSentence,
) -> Result<Vec<TaggedSentence>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(n);
    let mut attempts = 0;
    while out.len() < n {
        attempts += 1;
        if attempts > 50 * n + 1000 {
            return Err(Error::invalid(format!(
                "cannot generate {n} distinct {what}; got {}",
                out.len()
            )));
        }
        let s = make(rng);
        if seen.insert(detokenize(&s)) {
            out.push(s);
        }
    }
    Ok(out)
}

fn gaussian(rng: &mut impl Rng, dim: usize, scale: f64) -> Vec<f64> {
    // Box-Muller
    (0..dim)
        .map(|_| {
            let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
            let u2: f64 = rng.gen();
            scale * (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
        })
        .collect()
}

/// Vectors built as POS centroid + domain centroid + word-specific noise.
fn build_embeddings(
    sentences: &[(&str, &TaggedSentence)],
    dim: usize,
    rng: &mut ChaCha8Rng,
) -> Result<EmbeddingMatrix<f64>> {
    let content = ["NOUN", "VERB", "ADJ", "PROPN"];
    let mut info: BTreeMap<String, (String, String)> = BTreeMap::new();
    for (domain, s) in sentences {
        for (form, tag) in s.iter() {
            let key = form.to_lowercase();
            let field = if content.contains(&tag.as_str()) {
                domain.to_string()
            } else {
                "function".to_string()
            };
            info.entry(key).or_insert_with(|| (tag.clone(), field));
        }
    }
    let scale = 1.0 / (dim as f64).sqrt();
    let mut pos_centroids: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut field_centroids: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut rows = Vec::with_capacity(info.len());
    for (word, (tag, field)) in &info {
        let pc = pos_centroids
            .entry(tag.clone())
            .or_insert_with(|| gaussian(rng, dim, scale))
            .clone();
        let fc = field_centroids
            .entry(field.clone())
            .or_insert_with(|| gaussian(rng, dim, scale))
            .clone();
        let noise = gaussian(rng, dim, 0.7 * scale);
        let v = (0..dim).map(|i| pc[i] + fc[i] + noise[i]).collect();
        rows.push((word.clone(), v));
    }
    EmbeddingMatrix::from_rows(rows)
}

pub fn generate(config: &SynthConfig) -> Result<SynthCorpus> {
    if config.embedding_dim == 0 || config.jokes == 0 {
        return Err(Error::invalid(
            "synthetic corpus needs jokes and a positive embedding dimension",
        ));
    }
    let lex = Lexicons::new(config.zipf_exponent);
    let stream = |name: &str| ChaCha8Rng::seed_from_u64(derive_seed(config.seed, name));
    let jokes = unique(config.jokes, "jokes", &mut stream("jokes"), |r| lex.joke(r))?;
    let news = unique(config.news, "headlines", &mut stream("news"), |r| {
        lex.news(r)
    })?;
    let proverbs = unique(config.proverbs, "proverbs", &mut stream("proverbs"), |r| {
        lex.proverb(r)
    })?;

    let mut trng = stream("treebank");
    let treebank: Vec<TaggedSentence> = (0..config.treebank_sentences)
        .map(|_| match trng.gen_range(0..10) {
            0..=5 => lex.joke(&mut trng),
            6..=8 => lex.news(&mut trng),
            _ => lex.proverb(&mut trng),
        })
        .collect();

    // Cover every lexicon word, not just the sampled ones, so any corpus the
    // generator can produce is in vocabulary.
    let mut lexicon_sentences: Vec<(&str, TaggedSentence)> = Vec::new();
    let tagged = |words: &[&str], tag: &str| -> TaggedSentence {
        words
            .iter()
            .map(|w| (w.to_string(), tag.to_string()))
            .collect()
    };
    lexicon_sentences.push(("joke", tagged(JOKE_NOUNS_DE, "NOUN")));
    lexicon_sentences.push(("joke", tagged(JOKE_NOUNS_HET, "NOUN")));
    lexicon_sentences.push(("joke", tagged(JOKE_ADJECTIVES, "ADJ")));
    lexicon_sentences.push(("joke", tagged(JOKE_VERBS, "VERB")));
    lexicon_sentences.push(("joke", tagged(JOKE_NAMES, "PROPN")));
    lexicon_sentences.push(("joke", tagged(JOKE_PREPOSITIONS, "ADP")));
    lexicon_sentences.push(("news", tagged(NEWS_NOUNS, "NOUN")));
    lexicon_sentences.push(("news", tagged(NEWS_VERBS, "VERB")));
    lexicon_sentences.push(("news", tagged(NEWS_ADJECTIVES, "ADJ")));
    lexicon_sentences.push(("news", tagged(NEWS_PLACES, "PROPN")));
    lexicon_sentences.push(("proverb", tagged(PROVERB_NOUNS_DE, "NOUN")));
    lexicon_sentences.push(("proverb", tagged(PROVERB_NOUNS_HET, "NOUN")));
    lexicon_sentences.push(("proverb", tagged(PROVERB_VERBS, "VERB")));
    lexicon_sentences.push(("proverb", tagged(PROVERB_ADJECTIVES, "ADJ")));
    let mut all: Vec<(&str, &TaggedSentence)> =
        lexicon_sentences.iter().map(|(d, s)| (*d, s)).collect();
    all.extend(jokes.iter().map(|s| ("joke", s)));
    all.extend(news.iter().map(|s| ("news", s)));
    all.extend(proverbs.iter().map(|s| ("proverb", s)));
    all.extend(treebank.iter().map(|s| ("joke", s)));
    let embeddings = build_embeddings(&all, config.embedding_dim, &mut stream("embeddings"))?;

    Ok(SynthCorpus {
        jokes: jokes.iter().map(detokenize).collect(),
        news: news.iter().map(detokenize).collect(),
        proverbs: proverbs.iter().map(detokenize).collect(),
        treebank,
        embeddings,
    })
}

impl SynthCorpus {
    /// Writes the line corpora, the CoNLL-U treebank and the vectors into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let lines = |items: &[String]| items.iter().map(|l| format!("{l}\n")).collect::<String>();
        let files = [
            (JOKES_FILE, lines(&self.jokes)),
            (NEWS_FILE, lines(&self.news)),
            (PROVERBS_FILE, lines(&self.proverbs)),
            (TREEBANK_FILE, to_conllu(&self.treebank)),
            (EMBEDDINGS_FILE, self.embeddings.to_text()),
        ];
        for (name, content) in files {
            let path = dir.join(name);
            std::fs::write(&path, content).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tagger::parse_conllu;
    use crate::text::tokenize;

    fn small() -> SynthConfig {
        SynthConfig {
            jokes: 300,
            news: 200,
            proverbs: 50,
            treebank_sentences: 200,
            embedding_dim: 8,
            ..Default::default()
        }
    }

    #[test]
    fn deterministic_and_distinct() {
        let a = generate(&small()).unwrap();
        let b = generate(&small()).unwrap();
        assert_eq!(a.jokes, b.jokes);
        assert_eq!(a.embeddings, b.embeddings);
        assert_eq!(a.jokes.iter().collect::<BTreeSet<_>>().len(), 300);
        let c = generate(&SynthConfig { seed: 2, ..small() }).unwrap();
        assert_ne!(a.jokes, c.jokes);
    }

    #[test]
    fn treebank_agrees_with_tokenizer() {
        let c = generate(&small()).unwrap();
        for s in &c.treebank {
            let text = detokenize(s);
            let toks: Vec<String> = tokenize(&text).into_iter().map(|t| t.surface).collect();
            let forms: Vec<&String> = s.iter().map(|(f, _)| f).collect();
            assert_eq!(toks.iter().collect::<Vec<_>>(), forms, "{text}");
        }
        assert_eq!(parse_conllu(&to_conllu(&c.treebank)).unwrap(), c.treebank);
    }

    #[test]
    fn every_token_has_a_vector() {
        let c = generate(&small()).unwrap();
        for text in c.jokes.iter().chain(&c.news).chain(&c.proverbs) {
            for t in tokenize(text) {
                assert!(
                    c.embeddings.get(&t.normalized).is_some(),
                    "{}",
                    t.normalized
                );
            }
        }
    }

    #[test]
    fn jokes_look_like_jokes() {
        let c = generate(&small()).unwrap();
        assert!(c.jokes.iter().all(|j| j.ends_with('!')));
        assert!(c.news.iter().all(|n| !n.ends_with('!')));
        assert!(c
            .jokes
            .iter()
            .all(|j| j.chars().next().unwrap().is_uppercase()));
    }

    #[test]
    fn writes_all_files() {
        let dir = tempfile::tempdir().unwrap();
        let c = generate(&small()).unwrap();
        c.write(dir.path()).unwrap();
        for f in [
            JOKES_FILE,
            NEWS_FILE,
            PROVERBS_FILE,
            TREEBANK_FILE,
            EMBEDDINGS_FILE,
        ] {
            assert!(dir.path().join(f).exists());
        }
        let e = EmbeddingMatrix::<f64>::load(&dir.path().join(EMBEDDINGS_FILE)).unwrap();
        assert_eq!(e.len(), c.embeddings.len());
    }
}

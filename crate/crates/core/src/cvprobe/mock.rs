//! Deterministic CV generator standing in for a remote model. Each call's
//! randomness derives from the request key and attempt number alone, so a
//! rerun of the same plan reproduces every byte. Generated profiles are
//! internally consistent by construction (h <= publications, h^2 <= citations,
//! exact batch counts) unless a seeded fault says otherwise, which is what
//! lets validation tests distinguish real violations from false positives.

use super::prompts::extract_payload;
use super::{profile_key_parts, CvError};
use crate::runner::{ChatProvider, ProviderError, ProviderRequest, ProviderStamp};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;

/// Additive identity effects, applied on the scale named by the owning field
/// (log for counts, level for rates and means, log-odds for probabilities).
/// White/male/high-prestige is the zero reference.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvEffects {
    pub low_prestige: f64,
    pub female: f64,
    pub black: f64,
    pub hispanic: f64,
    pub asian: f64,
}

impl CvEffects {
    fn dot(&self, x: &IdentityX) -> f64 {
        let mut total = 0.0;
        if x.low_prestige {
            total += self.low_prestige;
        }
        if x.female {
            total += self.female;
        }
        if x.black {
            total += self.black;
        }
        if x.hispanic {
            total += self.hispanic;
        }
        if x.asian {
            total += self.asian;
        }
        total
    }
}

/// A deliberately corrupted output for one profile, used to prove that
/// validation catches violations without flagging clean profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CvFault {
    /// h_index is forced above num_publications.
    HIndexAbovePublications,
    /// i10_index is forced above num_publications.
    I10AbovePublications,
    /// total_citations is forced below h_index^2.
    HSquaredAboveCitations,
    /// every publication batch delivers one record fewer than requested
    ShortDelivery,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvMockSpec {
    /// Anchor for graduation years and publication years.
    pub current_year: i32,
    /// Geometric-mean publication count at assistant rank, zero effects.
    pub base_publications: f64,
    /// Log-scale effects on the publication count.
    pub publications_effects: CvEffects,
    pub publications_noise_sd: f64,
    /// Mean journal impact factor at assistant rank, zero effects.
    pub base_impact_factor: f64,
    pub impact_factor_effects: CvEffects,
    pub impact_factor_noise_sd: f64,
    /// Shift applied to publication-level impact factors relative to the
    /// profile-level metric, so derived and generated columns can diverge.
    pub derived_impact_factor_bias: f64,
    /// Mean first-year citations at assistant rank, zero effects.
    pub base_first_year_citations: f64,
    pub first_year_effects: CvEffects,
    pub first_year_noise_sd: f64,
    pub derived_first_year_bias: f64,
    /// Citations per publication; total_citations scales with the count.
    pub citations_per_publication: f64,
    /// Log-odds effects on tenure, on top of rank-specific base odds.
    pub tenure_effects: CvEffects,
    /// Share of profiles whose PhD school comes from the high-prestige pool.
    pub high_phd_rate: f64,
    pub phd_effects: CvEffects,
    /// Share of publications reporting an NA impact factor.
    pub na_impact_rate: f64,
    /// Share of profiles naming a PhD school absent from any prestige map.
    pub unknown_phd_rate: f64,
    /// Seeded corruptions, keyed by [`crate::cvprobe::profile_key`].
    pub faults: BTreeMap<String, CvFault>,
}

impl Default for CvMockSpec {
    fn default() -> Self {
        CvMockSpec {
            current_year: 2025,
            base_publications: 12.0,
            publications_effects: CvEffects::default(),
            publications_noise_sd: 0.25,
            base_impact_factor: 2.8,
            impact_factor_effects: CvEffects::default(),
            impact_factor_noise_sd: 0.6,
            derived_impact_factor_bias: 0.0,
            base_first_year_citations: 9.0,
            first_year_effects: CvEffects::default(),
            first_year_noise_sd: 1.5,
            derived_first_year_bias: 0.0,
            citations_per_publication: 75.0,
            tenure_effects: CvEffects::default(),
            high_phd_rate: 0.97,
            phd_effects: CvEffects::default(),
            na_impact_rate: 0.04,
            unknown_phd_rate: 0.0,
            faults: BTreeMap::new(),
        }
    }
}

impl CvMockSpec {
    /// Calibration that lands the corpus-level means near the documented
    /// defaults (publications ~26, citations ~2000, generated IF ~3.5,
    /// derived IF ~5.4) and diverges derived from generated metrics.
    pub fn demo() -> Self {
        CvMockSpec {
            derived_impact_factor_bias: 1.96,
            derived_first_year_bias: -1.1,
            unknown_phd_rate: 0.01,
            ..CvMockSpec::default()
        }
    }

    pub fn validate(&self) -> Result<(), CvError> {
        let rate_fields = [
            ("high_phd_rate", self.high_phd_rate),
            ("na_impact_rate", self.na_impact_rate),
            ("unknown_phd_rate", self.unknown_phd_rate),
        ];
        for (name, v) in rate_fields {
            if !(0.0..=1.0).contains(&v) {
                return Err(CvError::Config(format!("{name} must be in [0, 1], got {v}")));
            }
        }
        if self.high_phd_rate <= 0.0 || self.high_phd_rate >= 1.0 {
            return Err(CvError::Config(
                "high_phd_rate must be strictly inside (0, 1) for the log-odds shift".into(),
            ));
        }
        let positive = [
            ("base_publications", self.base_publications),
            ("base_impact_factor", self.base_impact_factor),
            ("base_first_year_citations", self.base_first_year_citations),
            ("citations_per_publication", self.citations_per_publication),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(CvError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        let sds = [
            ("publications_noise_sd", self.publications_noise_sd),
            ("impact_factor_noise_sd", self.impact_factor_noise_sd),
            ("first_year_noise_sd", self.first_year_noise_sd),
        ];
        for (name, v) in sds {
            if !(v.is_finite() && v >= 0.0) {
                return Err(CvError::Config(format!(
                    "{name} must be non-negative, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// A prestige-map file covering every school this mock can emit, so a
    /// mock corpus classifies without Unknowns (except the deliberately
    /// unlisted school behind `unknown_phd_rate`).
    pub fn prestige_map_csv() -> String {
        let mut out = String::from("institution,country,carnegie_class,world_rank,aliases\n");
        out.push_str("Harvard University,USA,R1,,\n");
        out.push_str("Stanford University,USA,R1,,\n");
        out.push_str("Massachusetts Institute of Technology,USA,R1,,MIT\n");
        out.push_str("University of California Berkeley,USA,R1,,UC Berkeley\n");
        out.push_str("University of Oxford,United Kingdom,,3,Oxford University\n");
        out.push_str("Peking University,China,,14,\n");
        out.push_str("San Jose State University,USA,M1,,\n");
        out.push_str("Montclair State University,USA,M1,,\n");
        out.push_str("University of Mumbai,India,,711,\n");
        out.push_str("University of Delhi,India,,328,\n");
        out
    }
}

pub const MOCK_HIGH_PHD_POOL: [&str; 6] = [
    "Harvard University",
    "Stanford University",
    "Massachusetts Institute of Technology",
    "University of California Berkeley",
    "University of Oxford",
    "Peking University",
];

pub const MOCK_LOW_PHD_POOL: [&str; 4] = [
    "San Jose State University",
    "Montclair State University",
    "University of Mumbai",
    "University of Delhi",
];

/// Emitted for the `unknown_phd_rate` slice; no prestige map lists it.
pub const MOCK_UNLISTED_PHD: &str = "Unlisted Institute of Technology";

const RANK_SPLIT: [f64; 2] = [0.45, 0.75]; // assistant | associate | full
const RANK_PUB_LOG_SHIFT: [f64; 3] = [0.0, 0.8, 1.4];
const RANK_IF_LIFT: [f64; 3] = [0.0, 0.9, 1.6];
const RANK_FYC_LIFT: [f64; 3] = [0.0, 2.0, 4.0];
const RANK_TENURE_LOGIT: [f64; 3] = [-2.2, 1.4, 3.0];
// graduation-year offsets keep every rank consistent with the default
// plausibility rule (full professors at least 12 years past the PhD)
const RANK_YEAR_RANGE: [(i32, i32); 3] = [(3, 9), (8, 16), (12, 35)];
const CITATION_NOISE_SD: f64 = 0.2;
const PUB_IF_NOISE_SD: f64 = 0.5;

const CO_AUTHOR_POOL: [&str; 8] = [
    "Jordan Avery",
    "Sam Whitfield",
    "Priya Raman",
    "Diego Fuentes",
    "Mei Lin",
    "Tunde Okafor",
    "Lena Hoffman",
    "Casey Morrow",
];

const TOPIC_TEMPLATES: [&str; 4] = [
    "Methods for open problems in",
    "Evidence on measurement in",
    "A reanalysis of benchmarks in",
    "Field observations on",
];

const JOURNAL_TEMPLATES: [&str; 4] = [
    "Journal of {} Research",
    "{} Letters",
    "Annals of {}",
    "International Review of {}",
];

/// Identity indicators recovered from a request payload.
struct IdentityX {
    low_prestige: bool,
    female: bool,
    black: bool,
    hispanic: bool,
    asian: bool,
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

// response shapes; field order fixes the output byte layout
#[derive(Serialize)]
struct PersonalResponse {
    index: u64,
    phd_granting_institution: String,
    phd_graduation_year: i32,
    faculty_rank: &'static str,
    tenure_status: &'static str,
    num_publications: u32,
}

#[derive(Serialize)]
struct ImpactResponse {
    index: u64,
    total_citations: u64,
    h_index: u32,
    i10_index: u32,
    average_first_year_citations: f64,
    average_impact_factor: f64,
}

#[derive(Serialize)]
struct PublicationResponse {
    co_authors: Vec<String>,
    topic: String,
    journal: String,
    journal_impact_factor: Value,
    year: i32,
    citations_first_year: u32,
}

#[derive(Serialize)]
struct PublicationsResponse {
    profile_pub_index: u64,
    publications: Vec<PublicationResponse>,
}

#[derive(Debug, Clone)]
pub struct CvMockGenerator {
    spec: CvMockSpec,
}

impl CvMockGenerator {
    pub fn new(spec: CvMockSpec) -> Result<Self, CvError> {
        spec.validate()?;
        Ok(CvMockGenerator { spec })
    }

    pub fn spec(&self) -> &CvMockSpec {
        &self.spec
    }

    /// Fresh RNG for one call; the attempt salt makes retries re-sample.
    fn rng_for(&self, key: &str, attempt: u32) -> ChaCha8Rng {
        let mut hasher = Sha256::new();
        hasher.update(b"revaudit.cvmock.v1|");
        hasher.update(key.as_bytes());
        hasher.update(b"|");
        hasher.update(attempt.to_le_bytes());
        ChaCha8Rng::from_seed(hasher.finalize().into())
    }

    fn payload<'a>(&self, prompt: &'a str) -> Result<Value, ProviderError> {
        let raw = extract_payload(prompt)
            .ok_or_else(|| ProviderError::Transport("prompt has no input payload".into()))?;
        serde_json::from_str::<Value>(raw)
            .map_err(|e| ProviderError::Transport(format!("mock could not read payload: {e}")))
    }

    fn identity(&self, payload: &Value) -> IdentityX {
        let prestige = payload["InstitutionPrestige"].as_str().unwrap_or("");
        let gender = payload["Gender"].as_str().unwrap_or("");
        let race = payload["Race"].as_str().unwrap_or("");
        IdentityX {
            low_prestige: prestige == "Low",
            female: gender == "Female",
            black: race == "Black",
            hispanic: race == "Hispanic",
            asian: race == "Asian",
        }
    }

    fn fault_for(&self, payload: &Value) -> Option<CvFault> {
        let name = payload["NameUsed"].as_str()?;
        let institution = payload["Institution"].as_str()?;
        let field = payload["Pub.Outlet"].as_str()?;
        let replicate = u32::try_from(payload["replicate"].as_u64()?).ok()?;
        self.spec
            .faults
            .get(&profile_key_parts(name, institution, field, replicate))
            .copied()
    }

    fn rank_index(rank_display: &str) -> usize {
        match rank_display {
            "Associate Professor" => 1,
            "Full Professor" => 2,
            _ => 0,
        }
    }

    fn personal(&self, payload: &Value, rng: &mut ChaCha8Rng) -> PersonalResponse {
        let spec = &self.spec;
        let x = self.identity(payload);
        let index = payload["index"].as_u64().unwrap_or(0);

        let u: f64 = rng.random();
        let rank = if u < RANK_SPLIT[0] {
            0
        } else if u < RANK_SPLIT[1] {
            1
        } else {
            2
        };
        let tenure_p = sigmoid(RANK_TENURE_LOGIT[rank] + spec.tenure_effects.dot(&x));
        let tenured = rng.random::<f64>() < tenure_p;

        let (lo, hi) = RANK_YEAR_RANGE[rank];
        let years_out = rng.random_range(lo..=hi);
        let phd_graduation_year = spec.current_year - years_out;

        let noise = Normal::new(0.0, spec.publications_noise_sd)
            .expect("validated sd")
            .sample(rng);
        let log_pubs = spec.base_publications.ln()
            + RANK_PUB_LOG_SHIFT[rank]
            + spec.publications_effects.dot(&x)
            + noise;
        let num_publications = log_pubs.exp().round().max(0.0) as u32;

        let unlisted = rng.random::<f64>() < spec.unknown_phd_rate;
        let phd_granting_institution = if unlisted {
            MOCK_UNLISTED_PHD.to_string()
        } else {
            let high_p = sigmoid(logit(spec.high_phd_rate) + spec.phd_effects.dot(&x));
            if rng.random::<f64>() < high_p {
                MOCK_HIGH_PHD_POOL[rng.random_range(0..MOCK_HIGH_PHD_POOL.len())].to_string()
            } else {
                MOCK_LOW_PHD_POOL[rng.random_range(0..MOCK_LOW_PHD_POOL.len())].to_string()
            }
        };

        PersonalResponse {
            index,
            phd_granting_institution,
            phd_graduation_year,
            faculty_rank: ["Assistant Professor", "Associate Professor", "Full Professor"][rank],
            tenure_status: if tenured { "Tenured" } else { "Non-tenured" },
            num_publications,
        }
    }

    fn impact(&self, payload: &Value, rng: &mut ChaCha8Rng) -> ImpactResponse {
        let spec = &self.spec;
        let x = self.identity(payload);
        let index = payload["index"].as_u64().unwrap_or(0);
        let pubs = payload["num_publications"].as_u64().unwrap_or(0) as u32;
        let rank = Self::rank_index(payload["faculty_rank"].as_str().unwrap_or(""));

        let cite_noise = Normal::new(0.0, CITATION_NOISE_SD)
            .expect("const sd")
            .sample(rng);
        let total_citations =
            (pubs as f64 * spec.citations_per_publication * cite_noise.exp()).round() as u64;
        // floor(sqrt(c)) squared never exceeds c, and the min keeps h within
        // the publication count; both invariants hold by construction
        let h_index = (total_citations as f64).sqrt().floor().min(pubs as f64) as u32;
        let i10_index = ((pubs as f64) * 0.7).round().min(pubs as f64) as u32;

        let fyc_noise = Normal::new(0.0, spec.first_year_noise_sd)
            .expect("validated sd")
            .sample(rng);
        let average_first_year_citations = round2(
            (spec.base_first_year_citations
                + RANK_FYC_LIFT[rank]
                + spec.first_year_effects.dot(&x)
                + fyc_noise)
                .max(0.1),
        );
        let if_noise = Normal::new(0.0, spec.impact_factor_noise_sd)
            .expect("validated sd")
            .sample(rng);
        let average_impact_factor = round2(
            (spec.base_impact_factor
                + RANK_IF_LIFT[rank]
                + spec.impact_factor_effects.dot(&x)
                + if_noise)
                .max(0.5),
        );

        let mut out = ImpactResponse {
            index,
            total_citations,
            h_index,
            i10_index,
            average_first_year_citations,
            average_impact_factor,
        };
        match self.fault_for(payload) {
            Some(CvFault::HIndexAbovePublications) => out.h_index = pubs + 5,
            Some(CvFault::I10AbovePublications) => out.i10_index = pubs + 3,
            Some(CvFault::HSquaredAboveCitations) => {
                out.h_index = out.h_index.max(2);
                out.total_citations = u64::from(out.h_index) * u64::from(out.h_index) / 2;
            }
            Some(CvFault::ShortDelivery) | None => {}
        }
        out
    }

    fn publications(&self, payload: &Value, rng: &mut ChaCha8Rng) -> PublicationsResponse {
        let spec = &self.spec;
        let index = payload["profile_pub_index"].as_u64().unwrap_or(0);
        let mut n = payload["batch_num_publications"].as_u64().unwrap_or(0) as u32;
        if matches!(self.fault_for(payload), Some(CvFault::ShortDelivery)) {
            n = n.saturating_sub(1);
        }
        let field = payload["Pub.Outlet"].as_str().unwrap_or("the field");
        let grad_year = payload["phd_graduation_year"]
            .as_i64()
            .unwrap_or(i64::from(spec.current_year) - 10) as i32;
        let avg_if = payload["average_impact_factor"].as_f64().unwrap_or(3.0);
        let avg_fyc = payload["average_first_year_citations"].as_f64().unwrap_or(5.0);

        let first_year = grad_year.min(spec.current_year);
        let fyc_mean = (avg_fyc + spec.derived_first_year_bias).max(0.1);
        let poisson = Poisson::new(fyc_mean).expect("positive mean");

        let mut publications = Vec::with_capacity(n as usize);
        for _ in 0..n {
            let n_co = rng.random_range(0..=3usize);
            let co_authors = rand::seq::index::sample(rng, CO_AUTHOR_POOL.len(), n_co)
                .into_iter()
                .map(|i| CO_AUTHOR_POOL[i].to_string())
                .collect();
            let topic = format!(
                "{} {}",
                TOPIC_TEMPLATES[rng.random_range(0..TOPIC_TEMPLATES.len())],
                field
            );
            let journal = JOURNAL_TEMPLATES[rng.random_range(0..JOURNAL_TEMPLATES.len())]
                .replace("{}", field);
            let journal_impact_factor = if rng.random::<f64>() < spec.na_impact_rate {
                Value::String("NA".into())
            } else {
                let noise = Normal::new(0.0, PUB_IF_NOISE_SD).expect("const sd").sample(rng);
                let v = round2((avg_if + spec.derived_impact_factor_bias + noise).max(0.3));
                serde_json::json!(v)
            };
            let year = rng.random_range(first_year..=spec.current_year);
            let citations_first_year = poisson.sample(rng).round().min(u32::MAX as f64) as u32;
            publications.push(PublicationResponse {
                co_authors,
                topic,
                journal,
                journal_impact_factor,
                year,
                citations_first_year,
            });
        }
        PublicationsResponse {
            profile_pub_index: index,
            publications,
        }
    }
}

impl ChatProvider for CvMockGenerator {
    fn respond(&self, request: &ProviderRequest) -> Result<String, ProviderError> {
        let payload = self.payload(request.prompt)?;
        let mut rng = self.rng_for(request.key, request.attempt);
        let body = if payload.get("batch_num_publications").is_some() {
            serde_json::to_string(&vec![self.publications(&payload, &mut rng)])
        } else if payload.get("num_publications").is_some() {
            serde_json::to_string(&vec![self.impact(&payload, &mut rng)])
        } else {
            serde_json::to_string(&vec![self.personal(&payload, &mut rng)])
        };
        body.map_err(|e| ProviderError::Transport(format!("mock serialization failed: {e}")))
    }

    fn stamp(&self) -> ProviderStamp {
        ProviderStamp {
            provider_kind: "cv-mock".into(),
            model_name: "cv-mock-v1".into(),
            temperature: 1.0,
        }
    }

    fn deterministic(&self) -> bool {
        true
    }
}

//! Seeded stand-ins for the public Adult, German Credit and insurance CSVs.
//!
//! The generators reproduce each file's header, category vocabulary and
//! rough marginal frequencies, and draw labels from a latent score so the
//! label depends on the features in a plausible direction. They are meant
//! for running the pipelines end to end when the real files are not at
//! hand; numbers obtained on them say nothing about the real datasets.

use std::fs;
use std::path::{Path, PathBuf};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{LogNormal, Normal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurrogateKind {
    Adult,
    GermanCredit,
    Insurance,
}

impl SurrogateKind {
    pub const ALL: [SurrogateKind; 3] = [
        SurrogateKind::Adult,
        SurrogateKind::GermanCredit,
        SurrogateKind::Insurance,
    ];

    /// File name of the public CSV this stands in for.
    pub fn file_name(self) -> &'static str {
        match self {
            SurrogateKind::Adult => "adult.csv",
            SurrogateKind::GermanCredit => "german_credit_data.csv",
            SurrogateKind::Insurance => "insurance.csv",
        }
    }

    /// Builtin descriptor that reads this file.
    pub fn descriptor(self) -> &'static str {
        match self {
            SurrogateKind::Adult => "adult",
            SurrogateKind::GermanCredit => "german_credit",
            SurrogateKind::Insurance => "insurance",
        }
    }

    /// Row count of the public file.
    pub fn default_rows(self) -> usize {
        match self {
            SurrogateKind::Adult => 48_842,
            SurrogateKind::GermanCredit => 1_000,
            SurrogateKind::Insurance => 1_338,
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        SurrogateKind::ALL
            .into_iter()
            .find(|k| k.descriptor() == name)
            .ok_or_else(|| Error::UnknownDomain(name.to_string()))
    }

    pub fn generate(self, rows: usize, seed: u64) -> Result<Vec<u8>> {
        match self {
            SurrogateKind::Adult => adult(rows, seed),
            SurrogateKind::GermanCredit => german_credit(rows, seed),
            SurrogateKind::Insurance => insurance(rows, seed),
        }
    }
}

/// Writes `kind.file_name()` into `dir` and returns its path.
pub fn write_surrogate(
    kind: SurrogateKind,
    dir: impl AsRef<Path>,
    rows: usize,
    seed: u64,
) -> Result<PathBuf> {
    let path = dir.as_ref().join(kind.file_name());
    fs::write(&path, kind.generate(rows, seed)?)?;
    Ok(path)
}

/// Reusable weighted choice over labels.
struct Pick<'a> {
    labels: Vec<&'a str>,
    dist: WeightedIndex<f64>,
}

impl<'a> Pick<'a> {
    fn new(table: &[(&'a str, f64)]) -> Self {
        Self {
            labels: table.iter().map(|(l, _)| *l).collect(),
            dist: WeightedIndex::new(table.iter().map(|(_, w)| *w)).expect("positive weights"),
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> &'a str {
        self.labels[self.dist.sample(rng)]
    }
}

fn pick<'a, R: Rng>(rng: &mut R, table: &[(&'a str, f64)]) -> &'a str {
    let dist = WeightedIndex::new(table.iter().map(|(_, w)| *w)).expect("positive weights");
    table[dist.sample(rng)].0
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn clamp_round(x: f64, lo: f64, hi: f64) -> i64 {
    x.round().clamp(lo, hi) as i64
}

const EDUCATION: [(&str, f64, u32); 16] = [
    ("Preschool", 0.002, 1),
    ("1st-4th", 0.005, 2),
    ("5th-6th", 0.010, 3),
    ("7th-8th", 0.020, 4),
    ("9th", 0.016, 5),
    ("10th", 0.029, 6),
    ("11th", 0.036, 7),
    ("12th", 0.013, 8),
    ("HS-grad", 0.320, 9),
    ("Some-college", 0.220, 10),
    ("Assoc-voc", 0.042, 11),
    ("Assoc-acdm", 0.033, 12),
    ("Bachelors", 0.165, 13),
    ("Masters", 0.054, 14),
    ("Prof-school", 0.017, 15),
    ("Doctorate", 0.013, 16),
];

fn adult(rows: usize, seed: u64) -> Result<Vec<u8>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = csv::Writer::from_writer(Vec::new());
    out.write_record([
        "age",
        "workclass",
        "fnlwgt",
        "education",
        "educational-num",
        "marital-status",
        "occupation",
        "relationship",
        "race",
        "gender",
        "capital-gain",
        "capital-loss",
        "hours-per-week",
        "native-country",
        "income",
    ])?;
    let age_dist = Normal::new(38.6f64, 13.6).expect("valid normal");
    let hours_noise = Normal::new(0.0f64, 11.0).expect("valid normal");
    let edu_dist = WeightedIndex::new(EDUCATION.iter().map(|e| e.1)).expect("weights");
    let race = Pick::new(&[
        ("White", 0.855),
        ("Black", 0.096),
        ("Asian-Pac-Islander", 0.031),
        ("Amer-Indian-Eskimo", 0.010),
        ("Other", 0.008),
    ]);
    let workclass = Pick::new(&[
        ("Private", 0.700),
        ("Self-emp-not-inc", 0.080),
        ("Local-gov", 0.064),
        ("State-gov", 0.040),
        ("Self-emp-inc", 0.034),
        ("Federal-gov", 0.030),
        ("Without-pay", 0.001),
        ("?", 0.051),
    ]);

    for _ in 0..rows {
        let male = rng.random_bool(0.67);
        let age = clamp_round(age_dist.sample(&mut rng), 17.0, 90.0);
        let (education, edu_num) = {
            let e = EDUCATION[edu_dist.sample(&mut rng)];
            (e.0, e.2)
        };
        let married_weight = if age < 25 { 0.15 } else { 0.62 } * if male { 1.0 } else { 0.55 };
        let marital = pick(
            &mut rng,
            &[
                ("Married-civ-spouse", married_weight),
                ("Never-married", if age < 25 { 0.8 } else { 0.18 }),
                ("Divorced", if age < 25 { 0.03 } else { 0.14 }),
                ("Separated", 0.03),
                ("Widowed", if age > 60 { 0.15 } else { 0.01 }),
                ("Married-spouse-absent", 0.012),
                ("Married-AF-spouse", 0.001),
            ],
        );
        let married = marital.starts_with("Married");
        let wc = workclass.sample(&mut rng);
        let degree = edu_num >= 13;
        let occupation = if wc == "?" {
            "?"
        } else if degree {
            pick(
                &mut rng,
                &[
                    ("Prof-specialty", 0.30),
                    ("Exec-managerial", 0.26),
                    ("Sales", 0.12),
                    ("Adm-clerical", if male { 0.07 } else { 0.15 }),
                    ("Tech-support", 0.05),
                    ("Craft-repair", 0.03),
                    ("Other-service", 0.03),
                    ("Protective-serv", 0.02),
                ],
            )
        } else {
            pick(
                &mut rng,
                &[
                    ("Craft-repair", if male { 0.20 } else { 0.03 }),
                    ("Adm-clerical", if male { 0.07 } else { 0.25 }),
                    ("Other-service", if male { 0.08 } else { 0.20 }),
                    ("Machine-op-inspct", 0.07),
                    ("Sales", 0.11),
                    ("Transport-moving", if male { 0.08 } else { 0.01 }),
                    ("Handlers-cleaners", 0.05),
                    ("Exec-managerial", 0.08),
                    ("Prof-specialty", 0.05),
                    ("Farming-fishing", 0.03),
                    ("Tech-support", 0.025),
                    ("Protective-serv", 0.02),
                    ("Priv-house-serv", if male { 0.001 } else { 0.015 }),
                    ("Armed-Forces", 0.0005),
                ],
            )
        };
        let hours = clamp_round(
            if male { 42.5 } else { 36.5 } + hours_noise.sample(&mut rng),
            1.0,
            99.0,
        );
        let native = if rng.random_bool(0.018) {
            "?"
        } else {
            pick(
                &mut rng,
                &[
                    ("United-States", 0.91),
                    ("Mexico", 0.02),
                    ("Philippines", 0.01),
                    ("Germany", 0.005),
                    ("Canada", 0.005),
                    ("India", 0.005),
                    ("Other", 0.045),
                ],
            )
        };
        let relationship = match (married, male) {
            (true, true) => "Husband",
            (true, false) => "Wife",
            _ if age < 25 => "Own-child",
            _ => "Not-in-family",
        };
        let professional = matches!(occupation, "Prof-specialty" | "Exec-managerial");
        let score = -9.4
            + 0.34 * edu_num as f64
            + 0.05 * (age.min(55) as f64)
            + 0.035 * hours as f64
            + 2.1 * f64::from(u8::from(married))
            + 0.8 * f64::from(u8::from(professional))
            + 0.4 * f64::from(u8::from(male))
            + 0.4 * f64::from(u8::from(wc == "Self-emp-inc"));
        let rich = rng.random_bool(sigmoid(score));
        let gain = if rich && rng.random_bool(0.15) {
            rng.random_range(3000..20000)
        } else {
            0
        };
        out.write_record([
            age.to_string().as_str(),
            wc,
            &rng.random_range(20_000..700_000u32).to_string(),
            education,
            &edu_num.to_string(),
            marital,
            occupation,
            relationship,
            race.sample(&mut rng),
            if male { "Male" } else { "Female" },
            &gain.to_string(),
            "0",
            &hours.to_string(),
            native,
            if rich { ">50K" } else { "<=50K" },
        ])?;
    }
    out.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn german_credit(rows: usize, seed: u64) -> Result<Vec<u8>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = csv::Writer::from_writer(Vec::new());
    out.write_record([
        "",
        "Age",
        "Sex",
        "Job",
        "Housing",
        "Saving accounts",
        "Checking account",
        "Credit amount",
        "Duration",
        "Purpose",
        "Risk",
    ])?;
    let age_dist = Normal::new(35.5f64, 11.4).expect("valid normal");
    let duration_dist = LogNormal::new(18f64.ln(), 0.55).expect("valid lognormal");
    let credit_noise = Normal::new(0.0f64, 0.55).expect("valid normal");
    for row in 0..rows {
        let male = rng.random_bool(0.69);
        let age = clamp_round(age_dist.sample(&mut rng), 19.0, 75.0);
        let job = pick(
            &mut rng,
            &[("0", 0.022), ("1", 0.200), ("2", 0.630), ("3", 0.148)],
        );
        let housing = pick(
            &mut rng,
            &[("own", 0.713), ("rent", 0.179), ("free", 0.108)],
        );
        let savings = pick(
            &mut rng,
            &[
                ("NA", 0.183),
                ("little", 0.603),
                ("moderate", 0.103),
                ("quite rich", 0.063),
                ("rich", 0.048),
            ],
        );
        let checking = pick(
            &mut rng,
            &[
                ("NA", 0.394),
                ("little", 0.274),
                ("moderate", 0.269),
                ("rich", 0.063),
            ],
        );
        let duration = clamp_round(duration_dist.sample(&mut rng), 4.0, 72.0);
        let credit = clamp_round(
            (2320f64.ln()
                + 0.8 * ((duration as f64).ln() - 18f64.ln())
                + credit_noise.sample(&mut rng))
            .exp(),
            250.0,
            18_424.0,
        );
        let purpose = pick(
            &mut rng,
            &[
                ("car", 0.337),
                ("radio/TV", 0.280),
                ("furniture/equipment", 0.181),
                ("business", 0.097),
                ("education", 0.059),
                ("repairs", 0.022),
                ("domestic appliances", 0.012),
                ("vacation/others", 0.012),
            ],
        );
        let score =
            0.9 + match checking {
                "NA" => 1.3,
                "little" => -0.7,
                "moderate" => -0.2,
                _ => 0.6,
            } + match savings {
                "NA" => 0.5,
                "little" => -0.3,
                "moderate" => 0.1,
                _ => 0.8,
            } + match job {
                "0" | "1" => -0.3,
                "2" => 0.0,
                _ => 0.2,
            } + match housing {
                "own" => 0.3,
                _ => -0.3,
            } - 0.035 * (duration as f64 - 20.0)
                - 0.00006 * (credit as f64 - 3000.0)
                + 0.015 * (age as f64 - 35.0)
                + if male { 0.25 } else { -0.1 }
                + match purpose {
                    "education" | "vacation/others" => -0.4,
                    "radio/TV" => 0.3,
                    _ => 0.0,
                };
        let good = rng.random_bool(sigmoid(score));
        out.write_record([
            row.to_string().as_str(),
            &age.to_string(),
            if male { "male" } else { "female" },
            job,
            housing,
            savings,
            checking,
            &credit.to_string(),
            &duration.to_string(),
            purpose,
            if good { "good" } else { "bad" },
        ])?;
    }
    out.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn insurance(rows: usize, seed: u64) -> Result<Vec<u8>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = csv::Writer::from_writer(Vec::new());
    out.write_record([
        "age", "sex", "bmi", "children", "smoker", "region", "charges",
    ])?;
    let bmi_dist = Normal::new(30.6f64, 6.1).expect("valid normal");
    let noise = Normal::new(0.0f64, 3000.0).expect("valid normal");
    for _ in 0..rows {
        let age = rng.random_range(18..=64i64);
        let male = rng.random_bool(0.5);
        let bmi = (bmi_dist.sample(&mut rng).clamp(16.0, 53.0) * 100.0).round() / 100.0;
        let children: i64 = pick(
            &mut rng,
            &[
                ("0", 0.43),
                ("1", 0.24),
                ("2", 0.18),
                ("3", 0.12),
                ("4", 0.02),
                ("5", 0.01),
            ],
        )
        .parse()
        .expect("digit");
        let smoker = rng.random_bool(0.205);
        let region = pick(
            &mut rng,
            &[
                ("southwest", 0.25),
                ("southeast", 0.27),
                ("northwest", 0.24),
                ("northeast", 0.24),
            ],
        );
        let region_shift = match region {
            "northeast" => 600.0,
            "southeast" => 300.0,
            _ => 0.0,
        };
        let mut charges = 265.0 * age as f64 - 2200.0
            + 475.0 * children as f64
            + region_shift
            + 150.0 * (bmi - 25.0).max(0.0);
        if smoker {
            charges += 13_500.0 + if bmi >= 30.0 { 19_000.0 } else { 0.0 };
        }
        charges = (charges + noise.sample(&mut rng)).max(1_100.0);
        out.write_record([
            age.to_string().as_str(),
            if male { "male" } else { "female" },
            &format!("{bmi:.2}"),
            &children.to_string(),
            if smoker { "yes" } else { "no" },
            region,
            &format!("{charges:.3}"),
        ])?;
    }
    out.into_inner().map_err(|e| Error::Io(e.into_error()))
}

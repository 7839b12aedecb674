//! The luxury NER label set: 37 entity labels plus `O`, with alias
//! normalization from any surface spelling to one canonical label.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TaxonomyError {
    #[error("unknown label {0:?}")]
    UnknownLabel(String),
    #[error("alias key {key:?} maps to both {first} and {second}")]
    DuplicateAlias {
        key: String,
        first: Label,
        second: Label,
    },
    #[error("taxonomy record line {line}: {message}")]
    Record { line: usize, message: String },
}

/// Canonical label identity. Variant order is the order of the reference
/// label table, with `Outside` first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Outside,
    Date,
    Location,
    Event,
    MonetaryValue,
    House,
    Brand,
    FastFashion,
    PrivateCompany,
    ListedGroup,
    HoldingTrust,
    InvestmentFirm,
    MediaPublisher,
    Hospitality,
    MuseumGallery,
    Retailer,
    Education,
    Organization,
    ArtisticDirector,
    Executive,
    Founder,
    Chairperson,
    AnalystBanker,
    Kol,
    AthleteTeam,
    Model,
    CreativeInsider,
    EditorJournalist,
    GarmCollection,
    Cosmetic,
    Fragrance,
    BagTrvlGoods,
    Jewelry,
    Timepiece,
    Footwear,
    WineSpirit,
    Sustainability,
    CulturalArtifact,
}

/// Reporting tier. Carries no scoring semantics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Tier {
    ContextGeneral,
    CorporateEntity,
    Institution,
    PersonRole,
    Product,
    Sustainability,
    Cultural,
    Outside,
}

impl Tier {
    pub fn as_str(self) -> &'static str {
        match self {
            Tier::ContextGeneral => "ContextGeneral",
            Tier::CorporateEntity => "CorporateEntity",
            Tier::Institution => "Institution",
            Tier::PersonRole => "PersonRole",
            Tier::Product => "Product",
            Tier::Sustainability => "Sustainability",
            Tier::Cultural => "Cultural",
            Tier::Outside => "Outside",
        }
    }

    fn parse(s: &str) -> Option<Tier> {
        Some(match s {
            "ContextGeneral" => Tier::ContextGeneral,
            "CorporateEntity" => Tier::CorporateEntity,
            "Institution" => Tier::Institution,
            "PersonRole" => Tier::PersonRole,
            "Product" => Tier::Product,
            "Sustainability" => Tier::Sustainability,
            "Cultural" => Tier::Cultural,
            "Outside" => Tier::Outside,
            _ => return None,
        })
    }
}

struct Row {
    label: Label,
    canonical: &'static str,
    display: &'static str,
    tier: Tier,
    description: &'static str,
    extra_aliases: &'static [&'static str],
}

const ROWS: [Row; 38] = [
    row(Label::Outside, "O", "Outside", Tier::Outside, "Outside (of a text segment)", &["Outside"]),
    row(Label::Date, "Date", "Date", Tier::ContextGeneral, "Temporal expressions (1854, Q2 2023, Nineties, September 21)", &[]),
    row(Label::Location, "Location", "Location", Tier::ContextGeneral, "Physical location and area (Paris, Japan, Europe, Champs-Élysées)", &[]),
    row(Label::Event, "Event", "Event", Tier::ContextGeneral, "Critical events (WW II, Olympics, IPO, Covid pandemic, Paris Fashion Week)", &[]),
    row(Label::MonetaryValue, "MonetaryValue", "Monetary Value", Tier::ContextGeneral, "Currency, price, sales, revenue ($2.65 billion, 4.6 million euros, CHF 400,000, etc.)", &[]),
    row(Label::House, "House", "House", Tier::CorporateEntity, "Fashion and luxury houses (Louis Vuitton, Cartier, Gucci, Chanel)", &[]),
    row(Label::Brand, "Brand", "Brand", Tier::CorporateEntity, "Sportswear, beauty and labels (Nike, Lululemon, Clinique)", &[]),
    row(Label::FastFashion, "FastFashion", "Fast Fashion", Tier::CorporateEntity, "Mass-market retailers (Zara, H&M, Uniqlo, Shein)", &[]),
    row(Label::PrivateCompany, "PrivateCompany", "Private Company", Tier::CorporateEntity, "Unlisted companies (Chanel SA, Stella McCartney Ltd, Valentino S.p.A)", &["PRIVAT COMPANY"]),
    row(Label::ListedGroup, "ListedGroup", "Listed Group", Tier::CorporateEntity, "Listed groups (LVMH, Hermès International SCA, Kering)", &[]),
    row(Label::HoldingTrust, "HoldingTrust", "Holding Trust", Tier::CorporateEntity, "Holding and family office (Agache, H51, Mousse Partners, Artémis)", &[]),
    row(Label::InvestmentFirm, "InvestmentFirm", "Investment Firm", Tier::CorporateEntity, "Investment banks, PE funds, M&A firms (KKR, L Catterton, Mayhoola, Bernstein)", &[]),
    row(Label::MediaPublisher, "MediaPublisher", "Media Publisher", Tier::Institution, "Media outlets (Bloomberg, Vogue, Business of Fashion, NYT)", &[]),
    row(Label::Hospitality, "Hospitality", "Hospitality", Tier::Institution, "Luxury hospitality (Ritz Paris, Belmond hotel Cipriani, Venetian Macao)", &[]),
    row(Label::MuseumGallery, "MuseumGallery", "Museum Gallery", Tier::Institution, "Exhibition spaces (Louvre, MET, Victoria & Albert, Pinault Collection)", &[]),
    row(Label::Retailer, "Retailer", "Retailer", Tier::Institution, "POS, department stores, and select shops (Bergdorf, Le Bon Marché, Takashimaya)", &[]),
    row(Label::Education, "Education", "Education", Tier::Institution, "Business and fashion schools (Polytechnic, Harvard, LSE, ESCP, Central Saint Martins, IFM)", &[]),
    row(Label::Organization, "Organization", "Organization", Tier::Institution, "Legal, scientific, and cultural entities (CFDA, European Union, UNESCO, SEC)", &["Organisation"]),
    row(Label::ArtisticDirector, "ArtisticDirector", "Artistic Director", Tier::PersonRole, "Lead creative of houses (Karl Lagerfeld, Daniel Lee, Sarah Burton, Alessandro Michele)", &[]),
    row(Label::Executive, "Executive", "Executive", Tier::PersonRole, "C-level, board members (Jérôme Lambert, Sue Nabi, Pietro Beccari)", &[]),
    row(Label::Founder, "Founder", "Founder", Tier::PersonRole, "Founder, creative, and owner (Ralph Lauren, Rei Kawakubo, Michael Kors)", &[]),
    row(Label::Chairperson, "Chairperson", "Chairperson", Tier::PersonRole, "Chairman/Chairwoman (e.g. Bernard Arnault, Patrizio Bertelli, François-Henri Pinault)", &[]),
    row(Label::AnalystBanker, "AnalystBanker", "Analyst Banker", Tier::PersonRole, "Equity analysts, M&A bankers (Luca Solca, Pierre Mallevays, Louise Singlehurst)", &[]),
    row(Label::Kol, "KOL", "KOL", Tier::PersonRole, "Artists, celebrities, historical figures (Audrey Hepburn, BTS, Kanye West, Emma Watson)", &["KOL Key Opinion Leader", "KOL (Key Opinion Leader)", "Key Opinion Leader"]),
    row(Label::AthleteTeam, "AthleteTeam", "Athlete Team", Tier::PersonRole, "Professional athletes, and teams (David Beckham, Serena Williams, Luna Rossa)", &[]),
    row(Label::Model, "Model", "Model", Tier::PersonRole, "Fashion models (Iman, Kate Moss, Adriana Lima, Naomi Campbell, Mariacarla Boscono)", &[]),
    row(Label::CreativeInsider, "CreativeInsider", "Creative Insider", Tier::PersonRole, "Photographers, make-up artists, watchmakers (Nick Knight, Dominique Ropion, Gérald Genta)", &[]),
    row(Label::EditorJournalist, "EditorJournalist", "Editor Journalist", Tier::PersonRole, "Editor-in-chief, fashion editors, journalists (Suzy Menkes, Anna Wintour, Carine Roitfeld)", &[]),
    row(Label::GarmCollection, "GarmCollection", "Garment Collection", Tier::Product, "Iconic garment and collections (Haute Couture, Bar suit, No.13 of McQueen, Jungle Dress)", &[]),
    row(Label::Cosmetic, "Cosmetic", "Cosmetic", Tier::Product, "Cosmetic products (Tilbury Glow palette, Crème de La Mer, YSL Nu, Viva Glam)", &[]),
    row(Label::Fragrance, "Fragrance", "Fragrance", Tier::Product, "Perfumes, and EdT (Chanel No.5, Dior Sauvage, Terre d'Hermès, Tom Ford Black Orchid)", &[]),
    row(Label::BagTrvlGoods, "BagTrvlGoods", "Bag Travel Goods", Tier::Product, "Bags, and leather goods (Hermès Birkin bag, Louis Vuitton Speedy bag, Chanel 2.55)", &[]),
    row(Label::Jewelry, "Jewelry", "Jewelry", Tier::Product, "Fine jewelry, and gems (Alhambra of Van Cleef & Arpels, Juste un Clou Cartier, Winston Blue)", &["Jewellery"]),
    row(Label::Timepiece, "Timepiece", "Timepiece", Tier::Product, "Fine watches (Nautilus Patek Philippe, Reverso Jaeger-Lecoultrre, Rolex Oyster)", &["TIME PIECE"]),
    row(Label::Footwear, "Footwear", "Footwear", Tier::Product, "High heels to sneakers (Rainbow of Ferragamo, Armadillo of McQueen, Air Force1)", &[]),
    row(Label::WineSpirit, "WineSpirit", "Wine Spirit", Tier::Product, "Wine and spirit (Château d'Yquem, Clos de Tart, Château Matras, Hennessy, Moet, Belvedere)", &[]),
    row(Label::Sustainability, "Sustainability", "Sustainability", Tier::Sustainability, "Relevant ESG factors and entities (Ethical Fashion Initiative, decoupling, biodiversity loss)", &[]),
    row(Label::CulturalArtifact, "CulturalArtifact", "Cultural Artifact", Tier::Cultural, "Songs, books, movies (The Devil wears Prada, American Gigolo, The College Dropout)", &[]),
];

const fn row(
    label: Label,
    canonical: &'static str,
    display: &'static str,
    tier: Tier,
    description: &'static str,
    extra_aliases: &'static [&'static str],
) -> Row {
    Row {
        label,
        canonical,
        display,
        tier,
        description,
        extra_aliases,
    }
}

/// Order of the label list in the zero-shot prompt.
const PROMPT_ORDER: [Label; 37] = [
    Label::Location,
    Label::Event,
    Label::MonetaryValue,
    Label::Date,
    Label::House,
    Label::Brand,
    Label::FastFashion,
    Label::PrivateCompany,
    Label::ListedGroup,
    Label::HoldingTrust,
    Label::InvestmentFirm,
    Label::MediaPublisher,
    Label::Hospitality,
    Label::MuseumGallery,
    Label::Retailer,
    Label::Education,
    Label::Organization,
    Label::ArtisticDirector,
    Label::Executive,
    Label::Founder,
    Label::Chairperson,
    Label::AnalystBanker,
    Label::Kol,
    Label::AthleteTeam,
    Label::Model,
    Label::CreativeInsider,
    Label::EditorJournalist,
    Label::GarmCollection,
    Label::Cosmetic,
    Label::Fragrance,
    Label::BagTrvlGoods,
    Label::Jewelry,
    Label::Timepiece,
    Label::Footwear,
    Label::WineSpirit,
    Label::Sustainability,
    Label::CulturalArtifact,
];

impl Label {
    /// Every label in table order, `Outside` first.
    pub const ALL: [Label; 38] = {
        let mut out = [Label::Outside; 38];
        let mut i = 0;
        while i < 38 {
            out[i] = ROWS[i].label;
            i += 1;
        }
        out
    };

    fn row(self) -> &'static Row {
        &ROWS[self as usize]
    }

    /// The 37 entity labels (everything except `Outside`), in table order.
    pub fn entities() -> impl Iterator<Item = Label> {
        Label::ALL.into_iter().skip(1)
    }

    pub fn canonical_name(self) -> &'static str {
        self.row().canonical
    }

    pub fn display_name(self) -> &'static str {
        self.row().display
    }

    pub fn tier(self) -> Tier {
        self.row().tier
    }

    pub fn description(self) -> &'static str {
        self.row().description
    }

    pub fn is_outside(self) -> bool {
        self == Label::Outside
    }

    /// Exact canonical-name lookup, no alias resolution.
    pub fn from_canonical(name: &str) -> Option<Label> {
        ROWS.iter().find(|r| r.canonical == name).map(|r| r.label)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.canonical_name())
    }
}

impl FromStr for Label {
    type Err = TaxonomyError;

    /// Resolves through the builtin taxonomy's alias index.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        builtin_taxonomy().normalize(s)
    }
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.canonical_name())
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Alias lookup key: lowercase, with whitespace, hyphens and periods removed.
pub fn alias_key(raw: &str) -> String {
    raw.chars()
        .filter(|c| !(c.is_whitespace() || *c == '-' || *c == '.'))
        .flat_map(char::to_lowercase)
        .collect()
}

/// Metadata view of one label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelDef {
    pub label: Label,
    pub aliases: Vec<String>,
}

impl LabelDef {
    pub fn canonical_name(&self) -> &'static str {
        self.label.canonical_name()
    }

    pub fn display_name(&self) -> &'static str {
        self.label.display_name()
    }

    pub fn tier(&self) -> Tier {
        self.label.tier()
    }

    pub fn description(&self) -> &'static str {
        self.label.description()
    }
}

/// Immutable label set with its alias index.
#[derive(Debug, Clone)]
pub struct Taxonomy {
    labels: Vec<LabelDef>,
    alias_index: HashMap<String, Label>,
}

impl Taxonomy {
    fn from_defs(labels: Vec<LabelDef>) -> Result<Self, TaxonomyError> {
        let mut alias_index = HashMap::new();
        for def in &labels {
            for alias in &def.aliases {
                let key = alias_key(alias);
                if key.is_empty() {
                    continue;
                }
                match alias_index.get(&key) {
                    Some(&other) if other != def.label => {
                        return Err(TaxonomyError::DuplicateAlias {
                            key,
                            first: other,
                            second: def.label,
                        })
                    }
                    _ => {
                        alias_index.insert(key, def.label);
                    }
                }
            }
        }
        Ok(Taxonomy {
            labels,
            alias_index,
        })
    }

    fn builtin() -> Self {
        let labels = ROWS
            .iter()
            .map(|r| {
                let mut aliases = vec![
                    r.canonical.to_string(),
                    r.display.to_string(),
                    squash_upper(r.canonical),
                ];
                aliases.extend(r.extra_aliases.iter().map(|a| a.to_string()));
                aliases.dedup();
                LabelDef {
                    label: r.label,
                    aliases,
                }
            })
            .collect();
        Taxonomy::from_defs(labels).expect("builtin taxonomy aliases are unique")
    }

    /// Labels in table order, `Outside` first.
    pub fn labels(&self) -> &[LabelDef] {
        &self.labels
    }

    pub fn def(&self, label: Label) -> &LabelDef {
        &self.labels[label as usize]
    }

    pub fn alias_index(&self) -> &HashMap<String, Label> {
        &self.alias_index
    }

    /// Resolve any registered spelling to its canonical label.
    pub fn normalize(&self, raw: &str) -> Result<Label, TaxonomyError> {
        self.alias_index
            .get(&alias_key(raw))
            .copied()
            .ok_or_else(|| TaxonomyError::UnknownLabel(raw.to_string()))
    }

    /// Display names in zero-shot prompt order. Never contains `Outside`.
    pub fn prompt_display_names(&self) -> Vec<&'static str> {
        PROMPT_ORDER.iter().map(|l| l.display_name()).collect()
    }

    /// Returns a copy with extra aliases registered for `label`.
    pub fn with_aliases<I, S>(&self, label: Label, aliases: I) -> Result<Taxonomy, TaxonomyError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut labels = self.labels.clone();
        let def = &mut labels[label as usize];
        for a in aliases {
            let a = a.into();
            if !def.aliases.contains(&a) {
                def.aliases.push(a);
            }
        }
        Taxonomy::from_defs(labels)
    }

    /// Tab-separated audit file: `canonical  display  tier  aliases  description`,
    /// aliases joined by `|`, preceded by a `#` header line.
    pub fn to_records(&self) -> String {
        let mut out = String::from("# canonical\tdisplay\ttier\taliases\tdescription\n");
        for def in &self.labels {
            out.push_str(def.canonical_name());
            out.push('\t');
            out.push_str(def.display_name());
            out.push('\t');
            out.push_str(def.tier().as_str());
            out.push('\t');
            out.push_str(&def.aliases.join("|"));
            out.push('\t');
            out.push_str(def.description());
            out.push('\n');
        }
        out
    }

    /// Reads a file in the [`Taxonomy::to_records`] layout. Canonical names,
    /// display names and tiers must match the builtin set; aliases may be
    /// extended.
    pub fn from_records(text: &str) -> Result<Taxonomy, TaxonomyError> {
        let base = builtin_taxonomy();
        let mut labels = base.labels.clone();
        let mut seen = vec![false; labels.len()];
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| TaxonomyError::Record {
                line: line_no,
                message,
            };
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 5 {
                return Err(err(format!("expected 5 fields, found {}", fields.len())));
            }
            let label = Label::from_canonical(fields[0])
                .ok_or_else(|| err(format!("unknown canonical name {:?}", fields[0])))?;
            if fields[1] != label.display_name() {
                return Err(err(format!("display name {:?} does not match {label}", fields[1])));
            }
            if Tier::parse(fields[2]) != Some(label.tier()) {
                return Err(err(format!("tier {:?} does not match {label}", fields[2])));
            }
            let def = &mut labels[label as usize];
            for alias in fields[3].split('|').filter(|a| !a.is_empty()) {
                if !def.aliases.iter().any(|a| a == alias) {
                    def.aliases.push(alias.to_string());
                }
            }
            seen[label as usize] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(TaxonomyError::Record {
                line: 0,
                message: format!("label {} missing", Label::ALL[missing]),
            });
        }
        Taxonomy::from_defs(labels)
    }
}

fn squash_upper(s: &str) -> String {
    s.chars()
        .filter(|c| !c.is_whitespace())
        .flat_map(char::to_uppercase)
        .collect()
}

/// The fixed 37 + `O` taxonomy. Shared, built once.
pub fn builtin_taxonomy() -> &'static Taxonomy {
    static TAXONOMY: OnceLock<Taxonomy> = OnceLock::new();
    TAXONOMY.get_or_init(Taxonomy::builtin)
}

/// Free-function form of [`Taxonomy::normalize`].
pub fn normalize_label(raw: &str, taxonomy: &Taxonomy) -> Result<Label, TaxonomyError> {
    taxonomy.normalize(raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn builtin_has_37_plus_outside() {
        let t = builtin_taxonomy();
        assert_eq!(t.labels().len(), 38);
        assert_eq!(t.labels()[0].label, Label::Outside);
        assert_eq!(t.labels()[0].canonical_name(), "O");
        assert_eq!(t.labels().iter().filter(|d| d.tier() == Tier::Outside).count(), 1);
        for (i, def) in t.labels().iter().enumerate() {
            assert_eq!(def.label as usize, i);
        }
    }

    #[test]
    fn builtin_is_stable_across_calls() {
        assert!(std::ptr::eq(builtin_taxonomy(), builtin_taxonomy()));
    }

    #[test]
    fn canonical_names_are_unique() {
        let mut names: Vec<_> = Label::ALL.iter().map(|l| l.canonical_name()).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), 38);
    }

    #[test]
    fn normalize_examples() {
        let t = builtin_taxonomy();
        assert_eq!(t.normalize("MONETARYVALUE"), Ok(Label::MonetaryValue));
        assert_eq!(t.normalize("Monetary Value"), Ok(Label::MonetaryValue));
        assert_eq!(t.normalize("TIME PIECE"), Ok(Label::Timepiece));
        assert_eq!(t.normalize("O"), Ok(Label::Outside));
        assert_eq!(
            t.normalize("Brandz"),
            Err(TaxonomyError::UnknownLabel("Brandz".into()))
        );
    }

    #[test]
    fn registered_typo_aliases() {
        let t = builtin_taxonomy();
        assert_eq!(t.normalize("PRIVAT COMPANY"), Ok(Label::PrivateCompany));
        assert_eq!(t.normalize("KOL Key Opinion Leader"), Ok(Label::Kol));
        assert_eq!(t.normalize("GarmCollection"), Ok(Label::GarmCollection));
        assert_eq!(t.normalize("Garment Collection"), Ok(Label::GarmCollection));
        assert_eq!(t.normalize("BagTrvlGoods"), Ok(Label::BagTrvlGoods));
        assert_eq!(t.normalize("Bag Travel Goods"), Ok(Label::BagTrvlGoods));
        assert_eq!(t.normalize("LISTEDGROUP"), Ok(Label::ListedGroup));
        assert_eq!(t.normalize("listed-group"), Ok(Label::ListedGroup));
    }

    #[test]
    fn alias_index_contains_required_forms() {
        let t = builtin_taxonomy();
        for def in t.labels() {
            for form in [
                def.canonical_name().to_string(),
                def.display_name().to_string(),
                squash_upper(def.canonical_name()),
            ] {
                assert_eq!(t.alias_index().get(&alias_key(&form)), Some(&def.label));
            }
        }
    }

    #[test]
    fn prompt_names_in_order() {
        let names = builtin_taxonomy().prompt_display_names();
        assert_eq!(names.len(), 37);
        assert_eq!(&names[..4], &["Location", "Event", "Monetary Value", "Date"]);
        assert_eq!(names[names.len() - 2..], ["Sustainability", "Cultural Artifact"]);
        assert!(names.contains(&"KOL"));
        assert!(names.contains(&"Garment Collection"));
        assert!(names.contains(&"Bag Travel Goods"));
        assert!(names.contains(&"Fast Fashion"));
        assert!(!names.contains(&"O") && !names.contains(&"Outside"));
        let mut sorted = PROMPT_ORDER.to_vec();
        sorted.sort();
        assert_eq!(sorted, Label::entities().collect::<Vec<_>>());
    }

    #[test]
    fn tiers_follow_reporting_groups() {
        assert_eq!(Label::FastFashion.tier(), Tier::CorporateEntity);
        assert_eq!(Label::InvestmentFirm.tier(), Tier::CorporateEntity);
        assert_eq!(Label::Organization.tier(), Tier::Institution);
        assert_eq!(Label::EditorJournalist.tier(), Tier::PersonRole);
        assert_eq!(Label::WineSpirit.tier(), Tier::Product);
        assert_eq!(Label::CulturalArtifact.tier(), Tier::Cultural);
    }

    #[test]
    fn duplicate_alias_rejected() {
        let err = builtin_taxonomy()
            .with_aliases(Label::House, ["Brand"])
            .unwrap_err();
        assert!(matches!(err, TaxonomyError::DuplicateAlias { .. }));
        let ok = builtin_taxonomy()
            .with_aliases(Label::House, ["Maison"])
            .unwrap();
        assert_eq!(ok.normalize("maison"), Ok(Label::House));
    }

    #[test]
    fn records_round_trip_and_extend() {
        let t = builtin_taxonomy();
        let text = t.to_records();
        assert_eq!(text.lines().count(), 39);
        let back = Taxonomy::from_records(&text).unwrap();
        assert_eq!(back.labels(), t.labels());

        let extended = text.replacen("\nHouse\tHouse\tCorporateEntity\t", "\nHouse\tHouse\tCorporateEntity\tMaison|", 1);
        let back = Taxonomy::from_records(&extended).unwrap();
        assert_eq!(back.normalize("MAISON"), Ok(Label::House));

        let broken = text.replacen("\tCorporateEntity\t", "\tProduct\t", 1);
        assert!(Taxonomy::from_records(&broken).is_err());
    }

    #[test]
    fn serde_uses_canonical_names() {
        let json = serde_json::to_string(&Label::Kol).unwrap();
        assert_eq!(json, "\"KOL\"");
        let back: Label = serde_json::from_str("\"Listed Group\"").unwrap();
        assert_eq!(back, Label::ListedGroup);
    }

    proptest! {
        #[test]
        fn round_trip_through_names(idx in 0usize..38) {
            let t = builtin_taxonomy();
            let l = Label::ALL[idx];
            prop_assert_eq!(t.normalize(l.canonical_name()), Ok(l));
            prop_assert_eq!(t.normalize(l.display_name()), Ok(l));
        }

        #[test]
        fn normalize_idempotent_under_key(raw in "[A-Za-z .\\-]{0,24}") {
            let t = builtin_taxonomy();
            prop_assert_eq!(t.normalize(&raw).ok(), t.normalize(&alias_key(&raw)).ok());
        }
    }
}

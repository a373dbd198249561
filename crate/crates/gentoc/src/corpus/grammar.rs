use std::collections::HashMap;

use crate::{GentocError, Result};

/// One attribute slot of a category: canonical name, surface synonyms, value
/// lexicon, how often it appears in a name, and how often vendors bother to
/// annotate it (drives the partial-label simulation).
#[derive(Debug, Clone)]
pub struct AttributeSlot {
    pub canonical: String,
    pub synonyms: Vec<String>,
    pub values: Vec<String>,
    pub inclusion_prob: f64,
    pub annotation_propensity: f64,
}

#[derive(Debug, Clone, Copy)]
pub enum TemplateItem {
    /// Index into the category's slot list.
    Slot(usize),
    /// One word drawn from the category's filler lexicon, never labeled.
    Filler,
}

#[derive(Debug, Clone)]
pub struct Template {
    pub items: Vec<TemplateItem>,
}

#[derive(Debug, Clone)]
pub struct Category {
    pub name: String,
    pub slots: Vec<AttributeSlot>,
    pub templates: Vec<Template>,
    pub fillers: Vec<String>,
}

/// Grammar for synthetic product catalogs.
#[derive(Debug, Clone)]
pub struct CatalogGrammar {
    pub categories: Vec<Category>,
    /// Probability that a slot surfaces under a synonym instead of its
    /// canonical name (given it has synonyms).
    pub synonym_rate: f64,
}

impl CatalogGrammar {
    /// Checks lexicon hygiene and that every template yields 2..=12 words.
    pub fn validate(&self) -> Result<()> {
        if self.categories.is_empty() {
            return Err(GentocError::InvalidInput("empty grammar".into()));
        }
        for cat in &self.categories {
            for slot in &cat.slots {
                if slot.values.is_empty() {
                    return Err(GentocError::InvalidInput(format!(
                        "slot {:?} in {:?} has no values",
                        slot.canonical, cat.name
                    )));
                }
                for name in std::iter::once(&slot.canonical).chain(&slot.synonyms) {
                    if name.contains(',') || name.contains(':') || name.is_empty() {
                        return Err(GentocError::InvalidInput(format!(
                            "attribute name {name:?} uses a reserved delimiter"
                        )));
                    }
                }
                for v in &slot.values {
                    if v.contains(',') || v.contains(':') || v.trim().is_empty() {
                        return Err(GentocError::InvalidInput(format!(
                            "value {v:?} of {:?} uses a reserved delimiter",
                            slot.canonical
                        )));
                    }
                }
            }
            for (ti, tpl) in cat.templates.iter().enumerate() {
                let mut min_words = 0usize;
                let mut max_words = 0usize;
                for item in &tpl.items {
                    match item {
                        TemplateItem::Filler => {
                            min_words += 1;
                            max_words += 1;
                        }
                        TemplateItem::Slot(i) => {
                            let slot = cat.slots.get(*i).ok_or_else(|| {
                                GentocError::InvalidInput(format!(
                                    "template {ti} of {:?} references slot {i}",
                                    cat.name
                                ))
                            })?;
                            let lens: Vec<usize> =
                                slot.values.iter().map(|v| v.split_whitespace().count()).collect();
                            if slot.inclusion_prob >= 1.0 {
                                min_words += lens.iter().min().copied().unwrap_or(0);
                            }
                            max_words += lens.iter().max().copied().unwrap_or(0);
                        }
                    }
                }
                if min_words < 2 || max_words > 12 {
                    return Err(GentocError::InvalidInput(format!(
                        "template {ti} of {:?} yields {min_words}..{max_words} words, need 2..12",
                        cat.name
                    )));
                }
            }
        }
        Ok(())
    }

    /// Surface attribute form (canonical or synonym) -> canonical name.
    pub fn synonym_map(&self) -> HashMap<String, String> {
        let mut map = HashMap::new();
        for cat in &self.categories {
            for slot in &cat.slots {
                map.insert(slot.canonical.clone(), slot.canonical.clone());
                for syn in &slot.synonyms {
                    map.insert(syn.clone(), slot.canonical.clone());
                }
            }
        }
        map
    }

    /// Surface attribute form -> annotation propensity.
    pub fn propensity_map(&self) -> HashMap<String, f64> {
        let mut map = HashMap::new();
        for cat in &self.categories {
            for slot in &cat.slots {
                map.insert(slot.canonical.clone(), slot.annotation_propensity);
                for syn in &slot.synonyms {
                    map.insert(syn.clone(), slot.annotation_propensity);
                }
            }
        }
        map
    }
}

fn slot(
    canonical: &str,
    synonyms: &[&str],
    values: &[&str],
    inclusion_prob: f64,
    annotation_propensity: f64,
) -> AttributeSlot {
    AttributeSlot {
        canonical: canonical.to_string(),
        synonyms: synonyms.iter().map(|s| s.to_string()).collect(),
        values: values.iter().map(|s| s.to_string()).collect(),
        inclusion_prob,
        annotation_propensity,
    }
}

fn tpl(items: &[TemplateItem]) -> Template {
    Template { items: items.to_vec() }
}

use TemplateItem::{Filler, Slot};

const BRANDS: &[&str] = &[
    "boat", "sofar", "globe", "kromex", "vexon", "aquilo", "primex", "nuvia", "stellar", "orbit",
    "zephyr", "magnor",
];
const COLORS: &[&str] = &[
    "black", "white", "blue", "red", "green", "grey", "maroon", "ivory", "raging red", "sky blue",
    "navy blue", "brown",
];
const MATERIALS: &[&str] = &[
    "stainless steel", "plastic", "brass", "wooden", "cotton", "copper", "aluminium", "leather",
    "bamboo", "mild steel",
];
const USAGES: &[&str] = &["industrial", "office", "kitchen", "home", "packaging", "outdoor"];

/// Built-in eight-category grammar: ~33 canonical attributes, 13 synonym
/// aliases, per-slot annotation propensities spanning 0.2..0.95.
pub fn default_grammar() -> CatalogGrammar {
    let headphones = Category {
        name: "headphones".into(),
        slots: vec![
            slot("brand", &["make"], BRANDS, 1.0, 0.95),
            slot(
                "model name",
                &["model", "model no.", "model number"],
                &["rockerz 255", "airdopes 141", "bassheads 100", "storm x7", "pulse 9", "vibe 330", "k9 pro", "t55"],
                0.75,
                0.7,
            ),
            slot("color", &["colour", "shade"], COLORS, 0.6, 0.75),
            slot("connectivity", &[], &["bluetooth", "wired", "wireless"], 0.7, 0.25),
            slot("headphone type", &[], &["neckband", "earbuds", "over ear", "on ear", "tws"], 1.0, 0.2),
            slot("playback time", &[], &["10 hours", "20 hours", "40 hours"], 0.25, 0.2),
        ],
        templates: vec![
            tpl(&[Slot(0), Slot(1), Slot(2), Slot(3), Slot(4)]),
            tpl(&[Slot(0), Slot(1), Slot(3), Slot(4), Slot(5)]),
            tpl(&[Slot(0), Slot(2), Filler, Slot(4)]),
            tpl(&[Slot(0), Slot(1), Slot(2), Slot(3), Filler, Slot(4), Slot(5), Filler]),
        ],
        fillers: vec!["premium".into(), "bass".into(), "edition".into(), "sound".into()],
    };

    let cookware = Category {
        name: "cookware".into(),
        slots: vec![
            slot("brand", &["make"], BRANDS, 1.0, 0.95),
            slot("material", &["made of"], MATERIALS, 0.7, 0.6),
            slot("capacity", &[], &["1 litre", "2 litre", "3 litre", "5 litre", "7 litre"], 0.5, 0.55),
            slot("cookware type", &[], &["pressure cooker", "frying pan", "kadai", "tawa", "stock pot"], 1.0, 0.5),
            slot("compatibility", &[], &["induction"], 0.3, 0.2),
        ],
        templates: vec![
            tpl(&[Slot(0), Slot(1), Slot(4), Slot(3), Slot(2)]),
            tpl(&[Slot(0), Slot(2), Slot(1), Slot(3)]),
            tpl(&[Slot(0), Slot(1), Slot(3), Filler]),
        ],
        fillers: vec!["heavy".into(), "combo".into(), "set".into()],
    };

    let apparel = Category {
        name: "apparel".into(),
        slots: vec![
            slot("gender", &["ideal for"], &["women", "men", "kids", "girls", "boys"], 1.0, 0.5),
            slot("color", &["colour", "shade"], COLORS, 0.8, 0.8),
            slot("pattern", &["design"], &["solid", "striped", "printed", "checked", "floral"], 0.6, 0.3),
            slot("sleeve type", &[], &["juliet sleeve", "full sleeve", "half sleeve", "sleeveless"], 0.4, 0.2),
            slot("occasion", &[], &["casual", "formal", "party wear", "sports"], 0.5, 0.25),
            slot("apparel type", &[], &["top", "shirt", "kurta", "jeans", "t-shirt", "dress"], 1.0, 0.55),
            slot("size", &[], &["s", "m", "l", "xl", "xxl"], 0.35, 0.4),
        ],
        templates: vec![
            tpl(&[Slot(4), Slot(3), Slot(2), Slot(0), Slot(1), Slot(5)]),
            tpl(&[Slot(0), Slot(1), Slot(2), Slot(5), Slot(6), Filler]),
            tpl(&[Slot(4), Slot(0), Slot(5), Filler]),
            tpl(&[Slot(4), Slot(3), Slot(2), Slot(0), Slot(1), Slot(5), Filler, Slot(6), Filler]),
        ],
        fillers: vec!["regular".into(), "fit".into(), "fashion".into()],
    };

    let inverter = Category {
        name: "inverter".into(),
        slots: vec![
            slot("brand", &["make"], BRANDS, 1.0, 0.95),
            slot("model name", &["model", "model no.", "model number"], &["5.5ktl-x", "3k-tl", "eco 1100", "zx 2200"], 0.6, 0.7),
            slot("capacity", &[], &["5.5kw", "3kw", "1100va", "2200va", "5kva"], 0.7, 0.55),
            slot("phase", &[], &["single phase", "three phase"], 0.6, 0.35),
            slot("grid type", &[], &["ongrid", "offgrid", "hybrid"], 0.5, 0.25),
            slot("inverter type", &[], &["inverter", "solar inverter", "ups"], 1.0, 0.5),
            slot("voltage", &[], &["220v", "110v"], 0.3, 0.3),
        ],
        templates: vec![
            tpl(&[Slot(0), Slot(4), Slot(5), Slot(1), Slot(2), Slot(3)]),
            tpl(&[Slot(0), Slot(5), Slot(2), Slot(6), Slot(3)]),
            tpl(&[Slot(0), Slot(4), Slot(5), Filler]),
            tpl(&[Slot(0), Slot(4), Slot(5), Slot(1), Slot(2), Slot(6), Slot(3), Filler]),
        ],
        fillers: vec!["mppt".into(), "digital".into()],
    };

    let furniture = Category {
        name: "furniture".into(),
        slots: vec![
            slot("material", &["made of"], MATERIALS, 0.8, 0.6),
            slot("furniture type", &[], &["chair", "table", "sofa", "bookshelf", "bed", "stool"], 1.0, 0.55),
            slot("seating", &[], &["2 seater", "3 seater", "5 seater"], 0.4, 0.3),
            slot("color", &["colour", "shade"], COLORS, 0.5, 0.75),
            slot("usage", &["application"], USAGES, 0.5, 0.35),
            slot("finish", &[], &["matte", "glossy"], 0.3, 0.25),
        ],
        templates: vec![
            tpl(&[Slot(3), Slot(0), Slot(2), Slot(1), Slot(4), Filler]),
            tpl(&[Slot(0), Slot(5), Slot(1), Filler]),
            tpl(&[Filler, Slot(3), Slot(0), Slot(1)]),
            tpl(&[Slot(3), Slot(0), Slot(2), Slot(1), Slot(4), Filler, Slot(5), Filler]),
        ],
        fillers: vec!["modern".into(), "foldable".into(), "designer".into()],
    };

    let pump = Category {
        name: "pump".into(),
        slots: vec![
            slot("brand", &["make"], BRANDS, 1.0, 0.95),
            slot("power", &["motor power"], &["0.5 hp", "1 hp", "2 hp", "5 hp"], 0.7, 0.5),
            slot("pump type", &[], &["submersible", "centrifugal", "monoblock", "booster"], 1.0, 0.45),
            slot("material", &["made of"], MATERIALS, 0.4, 0.6),
            slot("usage", &["application"], USAGES, 0.5, 0.35),
        ],
        templates: vec![
            tpl(&[Slot(0), Slot(1), Slot(2), Filler, Slot(4)]),
            tpl(&[Slot(0), Slot(3), Slot(2), Filler]),
            tpl(&[Slot(0), Slot(1), Slot(2), Filler, Filler]),
        ],
        fillers: vec!["pump".into(), "motor".into(), "water".into()],
    };

    let phone = Category {
        name: "phone".into(),
        slots: vec![
            slot("brand", &["make"], BRANDS, 1.0, 0.95),
            slot("model name", &["model", "model no.", "model number"], &["galaxy s21", "nova 9", "pixel 6a", "razr 40", "spark 10"], 0.8, 0.75),
            slot("color", &["colour", "shade"], COLORS, 0.6, 0.8),
            slot("storage", &["memory"], &["64gb", "128gb", "256gb"], 0.6, 0.6),
            slot("ram", &[], &["4gb", "6gb", "8gb"], 0.4, 0.3),
            slot("network", &[], &["4g", "5g"], 0.4, 0.3),
        ],
        templates: vec![
            tpl(&[Slot(0), Slot(1), Slot(3), Slot(4), Slot(2), Filler]),
            tpl(&[Slot(0), Slot(1), Slot(5), Slot(2), Filler]),
            tpl(&[Slot(0), Slot(3), Filler, Filler]),
            tpl(&[Slot(0), Slot(1), Slot(3), Slot(4), Slot(5), Slot(2), Filler, Filler]),
        ],
        fillers: vec!["smartphone".into(), "mobile".into(), "dual".into(), "sim".into()],
    };

    let mask = Category {
        name: "mask".into(),
        slots: vec![
            slot("brand", &["make"], BRANDS, 0.8, 0.9),
            slot("grade", &["rating"], &["n95", "kn95", "ffp2", "surgical"], 1.0, 0.6),
            slot("pack size", &[], &["pack of 5", "pack of 10", "pack of 50"], 0.5, 0.35),
            slot("color", &["colour", "shade"], COLORS, 0.4, 0.7),
            slot("mask type", &[], &["disposable", "reusable", "anti pollution"], 0.5, 0.25),
        ],
        templates: vec![
            tpl(&[Slot(0), Slot(1), Slot(4), Filler, Slot(2)]),
            tpl(&[Slot(0), Slot(3), Slot(1), Filler]),
            tpl(&[Slot(1), Slot(4), Filler, Slot(2)]),
        ],
        fillers: vec!["face".into(), "mask".into(), "safety".into()],
    };

    CatalogGrammar {
        categories: vec![headphones, cookware, apparel, inverter, furniture, pump, phone, mask],
        synonym_rate: 0.35,
    }
}

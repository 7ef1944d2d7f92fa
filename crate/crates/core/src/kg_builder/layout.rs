use std::collections::BTreeSet;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::Category;
use crate::error::{Error, Result};
use crate::post_encoder::POST_BEHAVIOR_WIDTH;

/// Name of the post-behaviour segment, filled by the post encoder.
pub const POST_BEHAVIOR: &str = "post_behavior";
/// Name of the optional padding slot.
pub const RESERVED: &str = "reserved";

/// Standard segments in vector order.
pub const STANDARD_SEGMENTS: [(&str, usize); 23] = [
    ("gender", 3),
    ("age", 1),
    ("location", 8),
    ("perfection", 1),
    ("ruminant", 1),
    ("sensitive", 1),
    ("stress_num", 1),
    ("stress_level", 1),
    ("stress_categories", 1),
    ("disorder", 1),
    ("attempt", 1),
    (POST_BEHAVIOR, POST_BEHAVIOR_WIDTH),
    ("suicide_words", 1),
    ("last_words", 1),
    ("future_words", 1),
    ("negation_words", 1),
    ("self_concern", 1),
    ("love_joy", 1),
    ("love_anxiety_sorrow", 1),
    ("following", 1),
    ("followers", 1),
    ("interactions", 1),
    // kept last so the vector order matches the category order above
    (RESERVED, 1),
];

/// Category of a standard segment name.
pub fn segment_category(name: &str) -> Option<Category> {
    use Category::*;
    Some(match name {
        "gender" | "age" | "location" => PersonalInformation,
        "perfection" | "ruminant" | "sensitive" => Personality,
        "stress_num" | "stress_level" | "stress_categories" | "disorder" | "attempt" => Experience,
        POST_BEHAVIOR => PostBehavior,
        "suicide_words" | "last_words" | "future_words" | "negation_words" | "self_concern"
        | "love_joy" | "love_anxiety_sorrow" => EmotionExpression,
        "following" | "followers" | "interactions" => SocialInteraction,
        _ => return None,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutEntry {
    pub name: String,
    pub offset: usize,
    pub width: usize,
}

impl LayoutEntry {
    pub fn range(&self) -> Range<usize> {
        self.offset..self.offset + self.width
    }

    pub fn category(&self) -> Option<Category> {
        segment_category(&self.name)
    }
}

/// Which segments a layout includes.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutOptions {
    /// Whole categories left out of the vector.
    #[serde(default)]
    pub disabled_categories: BTreeSet<Category>,
    /// Append one always-zero slot (61 wide instead of 60).
    #[serde(default)]
    pub reserved_slot: bool,
    /// Keep only the post-behaviour segment.
    #[serde(default)]
    pub post_behavior_only: bool,
}

/// Ordered `(name, offset, width)` map of a property vector.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "LayoutFile", into = "LayoutFile")]
pub struct PropertyLayout {
    entries: Vec<LayoutEntry>,
    total_width: usize,
}

/// Sidecar representation: `{"total_width": n, "entries": [[name, offset, width], ...]}`.
#[derive(Serialize, Deserialize)]
struct LayoutFile {
    total_width: usize,
    entries: Vec<(String, usize, usize)>,
}

impl TryFrom<LayoutFile> for PropertyLayout {
    type Error = Error;

    fn try_from(file: LayoutFile) -> Result<Self> {
        let entries: Vec<LayoutEntry> = file
            .entries
            .into_iter()
            .map(|(name, offset, width)| LayoutEntry { name, offset, width })
            .collect();
        let layout = PropertyLayout::from_entries(entries)?;
        if layout.total_width != file.total_width {
            return Err(Error::format(
                "property layout",
                format!(
                    "declared total_width {} but entries cover {}",
                    file.total_width, layout.total_width
                ),
            ));
        }
        Ok(layout)
    }
}

impl From<PropertyLayout> for LayoutFile {
    fn from(layout: PropertyLayout) -> Self {
        LayoutFile {
            total_width: layout.total_width,
            entries: layout
                .entries
                .into_iter()
                .map(|e| (e.name, e.offset, e.width))
                .collect(),
        }
    }
}

impl Default for PropertyLayout {
    fn default() -> Self {
        Self::standard()
    }
}

impl PropertyLayout {
    /// The 60-wide layout with every category.
    pub fn standard() -> Self {
        Self::with_options(&LayoutOptions::default())
    }

    /// Only the 30-wide post-behaviour segment.
    pub fn post_behavior_only() -> Self {
        Self::with_options(&LayoutOptions {
            post_behavior_only: true,
            ..LayoutOptions::default()
        })
    }

    pub fn with_options(options: &LayoutOptions) -> Self {
        let mut entries = Vec::new();
        let mut offset = 0;
        for (name, width) in STANDARD_SEGMENTS {
            let keep = match segment_category(name) {
                Some(Category::PostBehavior) => true,
                Some(category) => {
                    !options.post_behavior_only && !options.disabled_categories.contains(&category)
                }
                None => options.reserved_slot && !options.post_behavior_only,
            };
            if keep {
                entries.push(LayoutEntry {
                    name: name.to_string(),
                    offset,
                    width,
                });
                offset += width;
            }
        }
        PropertyLayout {
            entries,
            total_width: offset,
        }
    }

    /// Validate contiguity and uniqueness.
    pub fn from_entries(entries: Vec<LayoutEntry>) -> Result<Self> {
        let mut offset = 0;
        let mut names = BTreeSet::new();
        for entry in &entries {
            if entry.offset != offset || entry.width == 0 {
                return Err(Error::format(
                    "property layout",
                    format!(
                        "entry '{}' at offset {} width {} is not contiguous (expected offset {offset})",
                        entry.name, entry.offset, entry.width
                    ),
                ));
            }
            if !names.insert(entry.name.as_str()) {
                return Err(Error::format(
                    "property layout",
                    format!("duplicate entry '{}'", entry.name),
                ));
            }
            offset += entry.width;
        }
        Ok(PropertyLayout {
            entries,
            total_width: offset,
        })
    }

    pub fn entries(&self) -> &[LayoutEntry] {
        &self.entries
    }

    pub fn total_width(&self) -> usize {
        self.total_width
    }

    pub fn entry(&self, name: &str) -> Option<&LayoutEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn post_behavior_range(&self) -> Option<Range<usize>> {
        self.entry(POST_BEHAVIOR).map(LayoutEntry::range)
    }

    /// Name of the segment holding vector index `index`, with the position inside it.
    pub fn locate(&self, index: usize) -> Option<(&str, usize)> {
        self.entries
            .iter()
            .find(|e| e.range().contains(&index))
            .map(|e| (e.name.as_str(), index - e.offset))
    }

    /// One label per vector slot, e.g. `location[3]` or `age`.
    pub fn slot_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.total_width);
        for e in &self.entries {
            if e.width == 1 {
                names.push(e.name.clone());
            } else {
                names.extend((0..e.width).map(|i| format!("{}[{i}]", e.name)));
            }
        }
        names
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("layout serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::format("property layout", e.to_string()))
    }
}

impl std::fmt::Display for PropertyLayout {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[")?;
        for (i, e) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}@{}+{}", e.name, e.offset, e.width)?;
        }
        write!(f, "] (width {})", self.total_width)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_width_is_sixty() {
        let layout = PropertyLayout::standard();
        assert_eq!(layout.total_width(), 60);
        assert_eq!(layout.post_behavior_range(), Some(20..50));
        assert_eq!(layout.slot_names().len(), 60);
    }

    #[test]
    fn reserved_slot_gives_sixty_one() {
        let layout = PropertyLayout::with_options(&LayoutOptions {
            reserved_slot: true,
            ..Default::default()
        });
        assert_eq!(layout.total_width(), 61);
        assert_eq!(layout.entries().last().unwrap().name, RESERVED);
    }

    #[test]
    fn post_behavior_only_is_thirty() {
        assert_eq!(PropertyLayout::post_behavior_only().total_width(), 30);
    }

    #[test]
    fn disabling_categories_shrinks_layout() {
        let layout = PropertyLayout::with_options(&LayoutOptions {
            disabled_categories: [Category::PersonalInformation, Category::SocialInteraction]
                .into_iter()
                .collect(),
            ..Default::default()
        });
        assert_eq!(layout.total_width(), 60 - 12 - 3);
        assert!(layout.entry("gender").is_none());
        assert_eq!(layout.entries()[0].offset, 0);
    }

    #[test]
    fn json_round_trip_and_validation() {
        let layout = PropertyLayout::standard();
        assert_eq!(PropertyLayout::from_json(&layout.to_json()).unwrap(), layout);
        let bad = layout.to_json().replace("\"total_width\":60", "\"total_width\":61");
        assert!(PropertyLayout::from_json(&bad).is_err());
        let gap = r#"{"total_width":4,"entries":[["a",0,2],["b",3,1]]}"#;
        assert!(PropertyLayout::from_json(gap).is_err());
    }

    #[test]
    fn locate_slot() {
        let layout = PropertyLayout::standard();
        assert_eq!(layout.locate(0), Some(("gender", 0)));
        assert_eq!(layout.locate(5), Some(("location", 1)));
        assert_eq!(layout.locate(59), Some(("interactions", 0)));
        assert_eq!(layout.locate(60), None);
    }
}

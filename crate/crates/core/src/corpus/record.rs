use serde::{Deserialize, Deserializer, Serialize};

/// One comment or post of a discussion thread.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThreadNode {
    pub id: String,
    /// Absent, `null` or `""` for the root post.
    #[serde(default, deserialize_with = "empty_as_none")]
    pub parent_id: Option<String>,
    pub author: String,
    pub created_utc: f64,
    pub body: String,
}

fn empty_as_none<'de, D: Deserializer<'de>>(d: D) -> Result<Option<String>, D::Error> {
    let v: Option<String> = Option::deserialize(d)?;
    Ok(v.filter(|s| !s.is_empty()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Valid, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        }
    }
}

/// One (context, persona, response) example. Context arrays are oldest-first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConversationRecord {
    pub id: String,
    pub thread_id: String,
    pub domain: String,
    pub context: Vec<String>,
    pub context_speakers: Vec<String>,
    pub persona: Vec<String>,
    pub response: String,
    pub respondent: String,
    pub split: Split,
}

/// One line of the persona store.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PersonaEntry {
    pub author: String,
    pub persona: Vec<String>,
}

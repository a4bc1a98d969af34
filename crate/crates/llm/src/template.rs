//! Prompt templates for chapter counting and span labelling.
//!
//! Bodies follow the published prompts with the common indentation removed
//! and trailing spaces trimmed. Placeholders use `{name}`; `{{` and `}}`
//! render as literal braces. `{characters}` stands for the comma-joined
//! character list and `{character_set}` for the list printed as a Python
//! list literal, mirroring the two ways the original f-strings insert it.

use std::collections::BTreeMap;
use std::fmt;

use charspace::tagger::Component;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TemplateError {
    #[error("placeholder `{0}` has no value")]
    Missing(String),
    #[error("unbalanced brace at byte {0}")]
    Syntax(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TemplateName {
    AllTagsChunk,
    SingleTagChunk,
    CharactersPresent,
    IsCharacter,
    NameMapping,
    SpanDn,
    SpanDc,
    SpanC,
    SpanI,
    SpanA,
    SpanN,
}

impl TemplateName {
    pub const ALL: [TemplateName; 11] = [
        TemplateName::AllTagsChunk,
        TemplateName::SingleTagChunk,
        TemplateName::CharactersPresent,
        TemplateName::IsCharacter,
        TemplateName::NameMapping,
        TemplateName::SpanDn,
        TemplateName::SpanDc,
        TemplateName::SpanC,
        TemplateName::SpanI,
        TemplateName::SpanA,
        TemplateName::SpanN,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TemplateName::AllTagsChunk => "all-tags-chunk",
            TemplateName::SingleTagChunk => "single-tag-chunk",
            TemplateName::CharactersPresent => "characters-present",
            TemplateName::IsCharacter => "is-character",
            TemplateName::NameMapping => "name-mapping",
            TemplateName::SpanDn => "span-DN",
            TemplateName::SpanDc => "span-DC",
            TemplateName::SpanC => "span-C",
            TemplateName::SpanI => "span-I",
            TemplateName::SpanA => "span-A",
            TemplateName::SpanN => "span-N",
        }
    }

    pub fn body(self) -> &'static str {
        match self {
            TemplateName::AllTagsChunk => ALL_TAGS_CHUNK,
            TemplateName::SingleTagChunk => SINGLE_TAG_CHUNK,
            TemplateName::CharactersPresent => CHARACTERS_PRESENT,
            TemplateName::IsCharacter => IS_CHARACTER,
            TemplateName::NameMapping => NAME_MAPPING,
            TemplateName::SpanDn => SPAN_DN,
            TemplateName::SpanDc => SPAN_DC,
            TemplateName::SpanC => SPAN_C,
            TemplateName::SpanI => SPAN_I,
            TemplateName::SpanA => SPAN_A,
            TemplateName::SpanN => SPAN_N,
        }
    }

    /// Placeholder names in order of first appearance.
    pub fn placeholders(self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for piece in scan(self.body()).expect("built-in templates are well formed") {
            if let Piece::Var(v) = piece {
                if !out.iter().any(|o| o == v) {
                    out.push(v.to_string());
                }
            }
        }
        out
    }
}

impl fmt::Display for TemplateName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Definition line for one tag, shared by both counting prompts.
pub fn tag_description(tag: Component) -> &'static str {
    match tag {
        Component::N => "Count all named mentions of this person (including name variants).",
        Component::A => "Count each verb of physical action (exclude speech, thought, and feeling verbs).",
        Component::C => "Count blocks of directly quoted dialogue, paraphrased speech, and letters.",
        Component::I => "Count each verb expressing thought, feeling, intention, or interpretation.",
        Component::DN => "Count sentences describing the character by the narrator.",
        Component::DC => "Count sentences where other characters discuss the character.",
    }
}

/// Values for template placeholders.
#[derive(Debug, Clone, Default)]
pub struct Vars(BTreeMap<String, String>);

impl Vars {
    pub fn new() -> Self {
        Vars::default()
    }

    pub fn set(mut self, key: &str, value: impl Into<String>) -> Self {
        self.0.insert(key.to_string(), value.into());
        self
    }

    /// Fills both `{characters}` and `{character_set}`.
    pub fn characters<S: AsRef<str>>(self, names: &[S]) -> Self {
        let joined = names.iter().map(|s| s.as_ref()).collect::<Vec<_>>().join(", ");
        let listed = names
            .iter()
            .map(|s| format!("'{}'", s.as_ref().replace('\\', "\\\\").replace('\'', "\\'")))
            .collect::<Vec<_>>()
            .join(", ");
        self.set("characters", joined).set("character_set", format!("[{listed}]"))
    }

    pub fn tag(self, tag: Component) -> Self {
        self.set("tag", tag.as_str()).set("description", tag_description(tag))
    }
}

enum Piece<'a> {
    Text(&'a str),
    Brace(char),
    Var(&'a str),
}

fn scan(body: &str) -> Result<Vec<Piece<'_>>, TemplateError> {
    let bytes = body.as_bytes();
    let mut out = Vec::new();
    let (mut i, mut start) = (0, 0);
    while i < bytes.len() {
        match bytes[i] {
            b'{' | b'}' if bytes.get(i + 1) == Some(&bytes[i]) => {
                out.push(Piece::Text(&body[start..i]));
                out.push(Piece::Brace(bytes[i] as char));
                i += 2;
                start = i;
            }
            b'{' => {
                out.push(Piece::Text(&body[start..i]));
                let end = body[i..].find('}').ok_or(TemplateError::Syntax(i))? + i;
                let name = &body[i + 1..end];
                if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                    return Err(TemplateError::Syntax(i));
                }
                out.push(Piece::Var(name));
                i = end + 1;
                start = i;
            }
            b'}' => return Err(TemplateError::Syntax(i)),
            _ => i += 1,
        }
    }
    out.push(Piece::Text(&body[start..]));
    Ok(out)
}

/// Renders `body` with `vars`. Every placeholder must have a value; extra
/// values are ignored.
pub fn render_str(body: &str, vars: &Vars) -> Result<String, TemplateError> {
    let mut s = String::with_capacity(body.len());
    for piece in scan(body)? {
        match piece {
            Piece::Text(t) => s.push_str(t),
            Piece::Brace(c) => s.push(c),
            Piece::Var(v) => s.push_str(vars.0.get(v).ok_or_else(|| TemplateError::Missing(v.to_string()))?),
        }
    }
    Ok(s)
}

pub fn render_prompt(template: TemplateName, vars: &Vars) -> Result<String, TemplateError> {
    render_str(template.body(), vars)
}

const ALL_TAGS_CHUNK: &str = r#"Please analyze the following text and tag all instances of the following characters:
{characters}

For each character, include all name variants under the normalized form above (e.g., tags for "Lizzy" should be counted under "Elizabeth")

For each character, provide the following tags:
- N: Count all named mentions of this person (including name variants).
- A: Count each verb of physical action (exclude speech, thought, and feeling verbs).
- C: Count blocks of directly quoted dialogue, paraphrased speech, and letters.
- I: Count each verb expressing thought, feeling, intention, or interpretation.
- DN: Count sentences describing the character by the narrator.
- DC: Count sentences where other characters discuss the character.

Text:
{text}

Return the results as a JSON object with each character as a key and their tags as values. Only include characters that have at least one non-zero tag.
If a character has all tags equal to zero, omit it from the JSON output entirely.

Strictly output JSON in this format:
{{
    "Character1": {{"N": count1, "A": countA1, "C": countC1, "I": countI1, "DN": countDN1, "DC": countDC1}},
    "Character2": {{"N": count2, "A": countA2, "C": countC2, "I": countI2, "DN": countDN2, "DC": countDC2}},
    ...
}}"#;

const SINGLE_TAG_CHUNK: &str = r#"Please analyze the following text and tag all instances of the following characters:
{characters}

For each character, include all name variants under the normalized form above (e.g., tags for "Lizzy" should be counted under "Elizabeth")

Provide the counts for the '{tag}' tag only.

The tag '{tag}' is defined as:
- {description}

Text:
{text}

Return the results as a JSON object with each character as a key and its '{tag}' count as value. Only include characters that have a non-zero count.
If a character has '{tag}' count equal to zero, omit it from the JSON output entirely.

Strictly output JSON in this format:
{{
    "Character1": count1,
    "Character2": count2,
    ...
}}"#;

const CHARACTERS_PRESENT: &str = r#"{booktitle} section: {text}

Character list: {characters}

Which characters from the character list are present in the {booktitle} section? Include any character that are mentioned or referred to, even if they are not physically present in the scenes.

Strictly output a list of the characters who are present in this format: [character1, character2, etc.]"#;

const IS_CHARACTER: &str = r#"Consider the full text of {book} and all the characters it contains. Each character can be referred to by multiple different variants of ther name. Is {character_name} a character in {book}? Answer yes or no.

Answer:"#;

const NAME_MAPPING: &str = r#"Consider the following list of characters in {book}:
{character_set}

Which character from this list does the name {character_name} refer to? Answer with just the character name.

Answer:"#;

const SPAN_DN: &str = r#"Please analyze the following text for places where the narrator describes the following characters:
{characters}

For each character, list all instances where the narration describes something about the character's looks, manner, or dress. If a character is not described, do not include them.

Text:
{text}

Return the results as a JSON object with each character as a key and the list of descriptions as the value. Do not include instances of the character speaking, only descriptions from the narrator.

Strictly output JSON in this format:
{{
    "Character1": [phrase1, phrase2, ...],
    "Character2": [phrase1, ...],
    ...
}}"#;

const SPAN_DC: &str = r#"Please analyze the following dialogue for mentions of the following characters:
{characters}

Surrounding text for context:
{chunk}

Dialogue sentence (speaker: {character_name}):
{dialogue_sentence}

Resolve any pronouns, relational mentions, or name variants in the dialogue sentence to the proper character name.

Give your response as a JSON object with pronouns/mentions/names as the key and the character it refers to as the value in this format:
{{
    "pronoun": character1,
    "pronoun": character2,
    ...
}}"#;

const SPAN_C: &str = r#"Please analyze the dialogue and letters in the following text.

Full text for context:
{text}

Dialogue turn (or letter):{dialogue_turn}

Character list: {character_set}

Which character from the character list is the speaker (or writer) of this dialogue turn (or letter)?

Give just the character name as your response.

Answer:"#;

const SPAN_I: &str = r#"Please analyze the following text for descriptions of the feelings and thoughts of the following characters:
{characters}

For each character, list all instances where the narration shows us the characters thoughts, feelings, intentions, or perceptions.

Text:
{text}

Return the results as a JSON object with each character as a key and the list of thoughts/feelings as the value. Do not include instances of the character speaking, only descriptions from the narrator.

Strictly output JSON in this format:
{{
    "Character1": [phrase1, phrase2, ...],
    "Character2": [phrase1, ...],
    ...
}}"#;

const SPAN_A: &str = r#"Please analyze the following text for actions performed by the following characters:
{characters}

For each character, list all physical actions they perform. Do not include acts of talking, speaking, asking questions, or writing. Do not include acts of thinking or feeling.

Text:
{text}

Return the results as a JSON object with each character as a key and the list of actions as the value.

Strictly output JSON in this format:
{{
    "Character1": [phrase1, phrase2, ...],
    "Character2": [phrase1, ...],
    ...
}}"#;

const SPAN_N: &str = r#"Please analyze the following text for mentions of the following characters:
{characters}

For each character, list all variants of their name that are used to refer to them in the text. Do not include pronouns, only proper names. If they are referred to with and without a title, include both variants.

Text:
{text}

Return the results as a JSON object with each character as a key and the list of name variants as the value.

Strictly output JSON in this format:
{{
    "Character1": [name1, name2, ...],
    "Character2": [name1, ...],
    ...
}}"#;

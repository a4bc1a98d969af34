use charspace::annotation::NameResolver;

use crate::client::ClientConfig;
use crate::template::{render_prompt, TemplateName, Vars};
use crate::transport::{ChatRequest, Transport};

/// Asks the model which gold character an unmatched predicted name refers
/// to. The answer is returned trimmed of whitespace and surrounding quotes;
/// `map_aliases` still checks that it names a gold character.
pub struct LlmNameResolver<'a> {
    pub transport: &'a dyn Transport,
    pub book: String,
    pub config: ClientConfig,
}

impl NameResolver for LlmNameResolver<'_> {
    fn resolve(&self, name: &str, gold_names: &[String]) -> Option<String> {
        let vars = Vars::new()
            .characters(gold_names)
            .set("book", self.book.as_str())
            .set("character_name", name);
        let prompt = render_prompt(TemplateName::NameMapping, &vars).ok()?;
        let req = ChatRequest::user(&self.config.model, self.config.temperature, prompt);
        match self.transport.complete(&req) {
            Ok(r) => {
                let answer = r.content.trim().trim_matches(|c| c == '"' || c == '\'').trim();
                (!answer.is_empty()).then(|| answer.to_string())
            }
            Err(e) => {
                log::warn!("name mapping for `{name}` failed: {e}");
                None
            }
        }
    }
}

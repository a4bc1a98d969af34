//! Annotation bundle parsing and the character registry.

pub mod aliases;
pub mod bundle;
pub mod markup;
pub mod registry;

pub use aliases::{map_aliases, AliasMap, GoldCharacter, MatchMode, NameResolver, UnmappedName};
pub use bundle::{
    parse_bundle, parse_bundle_str, write_bundle, AnnotationBundle, BundleError, ClusterId, MentionProp, MentionSpan, QuoteKind, QuoteSpan,
    SupersenseInventory, SupersenseSpan, Token, TokenId,
};
pub use markup::{parse_markup, MarkupError};
pub use registry::{
    apply_merge_map, assign_gender, build_registry, parse_merge_map, CharId, Character, Gender, PronounInventory,
    Registry, RegistryConfig, RegistryError,
};

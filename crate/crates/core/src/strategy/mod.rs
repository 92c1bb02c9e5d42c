//! Translation approaches: unit planning, prompt construction, response
//! parsing and the rolling summary.

pub mod approach;
pub mod cod;
pub mod examples;
pub mod parse;
pub mod plan;
pub mod request;
pub mod template;

pub use approach::{
    Approach, ApproachRow, ResponseGrammar, TextualContext, UnitKind, VisualContext,
};
pub use cod::{
    cod_apply, cod_refine_request, render_cod_response, DenserSummary, RollingSummary, DEFAULT_LMAX,
};
pub use examples::{language_name, ExampleSet};
pub use parse::{
    parse_response, parse_with_grammar, render_response, ParseError, ParsedLine, ParsedTranslation,
};
pub use plan::{plan_units, three_page_window, TranslationUnit};
pub use request::{
    build_request, ImageSource, NoImages, PromptTemplates, RequestContext, RequestError,
};

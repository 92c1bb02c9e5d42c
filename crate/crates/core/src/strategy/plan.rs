use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::approach::{Approach, UnitKind, VisualContext};
use crate::corpus::Volume;

/// The span of text sent to the model in one request.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslationUnit {
    pub index: usize,
    pub volume_id: String,
    /// Positions in `volume.pages` whose text the request carries.
    pub page_indices: Vec<usize>,
    /// Page whose lines the unit translates; `None` for whole-volume units.
    pub focus_page: Option<usize>,
    /// Lines the unit produces hypotheses for, in global reading order.
    pub line_ids: Vec<String>,
    pub target_lang: String,
}

/// Pages whose text accompanies page `pos` under the three-page window:
/// previous, current and next, shifted inward at the volume edges.
pub fn three_page_window(pos: usize, page_count: usize) -> Vec<usize> {
    if page_count <= 3 {
        return (0..page_count).collect();
    }
    let start = pos.saturating_sub(1).min(page_count - 3);
    (start..start + 3).collect()
}

/// Units of `approach` over `volume` in execution order. Pages without
/// lines yield no unit.
pub fn plan_units(volume: &Volume, approach: Approach, target_lang: &str) -> Vec<TranslationUnit> {
    let row = approach.row();
    let volume_id = volume.id();
    let page_count = volume.pages.len();
    let mut units = Vec::new();
    let mut push = |page_indices: Vec<usize>, focus_page: Option<usize>, line_ids: Vec<String>| {
        units.push(TranslationUnit {
            index: units.len(),
            volume_id: volume_id.clone(),
            page_indices,
            focus_page,
            line_ids,
            target_lang: String::from(target_lang),
        });
    };
    match row.unit {
        UnitKind::Line => {
            for line in volume.lines() {
                push(
                    alloc::vec![line.page_pos],
                    Some(line.page_pos),
                    alloc::vec![line.region.id.clone()],
                );
            }
        }
        UnitKind::Page => {
            for (pos, page) in volume.pages.iter().enumerate() {
                let line_ids: Vec<String> = page.lines().map(|r| r.id.clone()).collect();
                if line_ids.is_empty() {
                    continue;
                }
                let pages = match row.visual {
                    VisualContext::ThreePages => three_page_window(pos, page_count),
                    VisualContext::Volume => (0..page_count).collect(),
                    _ => alloc::vec![pos],
                };
                push(pages, Some(pos), line_ids);
            }
        }
        UnitKind::Volume => {
            let line_ids: Vec<String> = volume.lines().map(|l| l.region.id.clone()).collect();
            if !line_ids.is_empty() {
                push((0..page_count).collect(), None, line_ids);
            }
        }
    }
    units
}

#include "csm/error.hpp"

namespace csm {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::parse: return "parse_error";
    case ErrorKind::validation: return "validation_error";
    case ErrorKind::conflict: return "conflict";
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::alignment: return "alignment_error";
    case ErrorKind::insufficient_data: return "insufficient_data";
    case ErrorKind::singular_design: return "singular_design";
    case ErrorKind::degenerate_selection: return "degenerate_selection";
    case ErrorKind::coverage: return "coverage_error";
    case ErrorKind::model_mismatch: return "model_mismatch";
    case ErrorKind::not_found: return "not_found";
    case ErrorKind::config: return "config_error";
    case ErrorKind::io: return "io_error";
    }
    return "error";
}

}  // namespace csm

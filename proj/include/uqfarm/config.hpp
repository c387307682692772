#pragma once

#include <string>

#include "uqfarm/types.hpp"

namespace uqfarm {

// Parses and validates a study configuration document (JSON).
// Throws ParseError on malformed text, ValidationError on bad content.
StudySpec load_study_spec(const std::string& document);
StudySpec load_study_spec_file(const std::string& path);

// Serializes a StudySpec back to the config format; load(save(s)) == s.
std::string save_study_spec(const StudySpec& spec);

std::string summary_kind_name(SummaryKind kind);
SummaryKind summary_kind_from_name(const std::string& name);

} // namespace uqfarm

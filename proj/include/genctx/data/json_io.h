#pragma once

#include <json.hpp>

#include "genctx/data/corpus.h"

namespace genctx::data {

nlohmann::json to_json(const CorpusConfig& config);
/// Keys missing from `j` keep their defaults; unknown keys throw ConfigError.
CorpusConfig corpus_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Lexicon& lexicon);
Lexicon lexicon_from_json(const nlohmann::json& j);

}  // namespace genctx::data

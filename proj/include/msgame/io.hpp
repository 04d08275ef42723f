#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "msgame/consistency.hpp"
#include "msgame/game.hpp"
#include "msgame/solvers.hpp"
#include "msgame/vi.hpp"

namespace msgame::io {

// Unreadable file or unparseable JSON.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// Readable JSON that violates the game file contract; the message names the field.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);
nlohmann::json parse_json_file(const std::string& path);

// Game files: {levels, partitions, within_group_edges, top_level_edges,
// a, b, c, kappa, boxes} plus optional level_benefits / group_exponential.
// partitions[l-2] lists the level-l groups as arrays of child indices;
// within_group_edges[l-2][k] holds [i, j, w] triplets in indices local to
// group k. Unknown fields produce warnings, not errors.
nlohmann::json game_to_json(const MultiScaleGame& g);
MultiScaleGame game_from_json(const nlohmann::json& j,
                              std::vector<std::string>* warnings = nullptr);
void write_game(const std::string& path, const MultiScaleGame& g);
MultiScaleGame read_game(const std::string& path, std::vector<std::string>* warnings = nullptr);

nlohmann::json certificate_to_json(const UniquenessCertificate& cert);
nlohmann::json report_to_json(const SolverReport& rep);
nlohmann::json verdict_to_json(const ConsistencyVerdict& v);

}  // namespace msgame::io

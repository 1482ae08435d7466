#pragma once

#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "colog/log_ingest.hpp"

namespace colog {

struct DrainConfig {
  int depth = 4;              // tree depth excluding root and leaf
  double sim_threshold = 0.4; // fraction in (0, 1]
  int max_children = 100;     // per internal node; overflow routes to <*>

  void validate() const;  // throws ConfigError
};

// Template tokens are literal-or-wildcard; the wildcard is a distinguished
// sentinel, not a reserved string, so log text can never collide with it.
struct TemplateToken {
  bool wildcard = false;
  std::string text;
};

struct Template {
  int template_id = -1;
  std::vector<TemplateToken> tokens;
  long count = 0;

  std::string text() const;  // tokens joined by spaces, wildcards as <*>
};

// Fixed-depth parse tree. Level 1 routes on token count, the next depth-2
// levels route on the leading tokens (digit-bearing tokens take the wildcard
// branch), and leaves hold template groups compared by token similarity.
class DrainTree {
public:
  explicit DrainTree(DrainConfig config = {});

  // Matches against the leaf group, merging differing positions into
  // wildcards, or inserts a new template. Returns the template id.
  // Token similarity = (# equal-position equal tokens) / template length.
  int match(const std::vector<std::string>& tokens);

  const Template& template_at(int template_id) const { return templates_.at(template_id); }
  const std::vector<Template>& templates() const { return templates_; }

  // Whitespace split of the raw message, case preserved.
  static std::vector<std::string> message_tokens(const std::string& message);

private:
  struct Node {
    std::map<std::string, std::unique_ptr<Node>> children;
    std::vector<int> group;  // template ids, insertion order
  };

  Node* route(const std::vector<std::string>& tokens);

  DrainConfig config_;
  Node root_;
  std::vector<Template> templates_;
};

// Header-splits and template-mines a whole file. Records with an empty
// message keep template_id -1. Order preserving; one record per non-empty
// line.
std::vector<std::pair<LogRecord, int>> parse_file(const std::string& path,
                                                  const HeaderPattern& pattern,
                                                  DrainTree& tree);

}  // namespace colog

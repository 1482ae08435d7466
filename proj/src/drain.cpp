#include "colog/drain.hpp"

#include <algorithm>
#include <sstream>

#include "colog/errors.hpp"

namespace colog {

namespace {

constexpr const char* kWildcardKey = "\x01<*>";  // child-map key, never a token

bool has_digit(const std::string& token) {
  return std::any_of(token.begin(), token.end(),
                     [](unsigned char c) { return std::isdigit(c); });
}

}  // namespace

void DrainConfig::validate() const {
  if (depth < 2) throw ConfigError("drain: depth must be >= 2");
  if (!(sim_threshold > 0.0 && sim_threshold <= 1.0))
    throw ConfigError("drain: sim_threshold must be in (0, 1]");
  if (max_children < 1) throw ConfigError("drain: max_children must be >= 1");
}

std::string Template::text() const {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i].wildcard ? "<*>" : tokens[i].text;
  }
  return out;
}

DrainTree::DrainTree(DrainConfig config) : config_(config) { config_.validate(); }

std::vector<std::string> DrainTree::message_tokens(const std::string& message) {
  std::vector<std::string> tokens;
  std::istringstream in(message);
  std::string tok;
  while (in >> tok) tokens.push_back(tok);
  return tokens;
}

DrainTree::Node* DrainTree::route(const std::vector<std::string>& tokens) {
  Node* node = &root_;
  const auto descend = [&](const std::string& key) -> Node* {
    auto it = node->children.find(key);
    if (it == node->children.end()) {
      if (key != kWildcardKey &&
          node->children.size() >= static_cast<std::size_t>(config_.max_children)) {
        // Child table full: reroute through the wildcard branch.
        it = node->children.find(kWildcardKey);
        if (it == node->children.end())
          it = node->children.emplace(kWildcardKey, std::make_unique<Node>()).first;
        return it->second.get();
      }
      it = node->children.emplace(key, std::make_unique<Node>()).first;
    }
    return it->second.get();
  };
  // Level 1: token count.
  node = descend(std::to_string(tokens.size()));
  // Levels 2..depth-1: leading tokens; digit-bearing tokens share a branch.
  const std::size_t levels =
      std::min<std::size_t>(static_cast<std::size_t>(config_.depth - 2), tokens.size());
  for (std::size_t i = 0; i < levels; ++i) {
    const std::string key = has_digit(tokens[i]) ? std::string(kWildcardKey) : tokens[i];
    node = descend(key);
  }
  return node;
}

int DrainTree::match(const std::vector<std::string>& tokens) {
  if (tokens.empty()) throw DataError("drain: cannot match an empty token list");
  Node* leaf = route(tokens);

  int best_id = -1;
  double best_sim = -1.0;
  for (int id : leaf->group) {
    const Template& tpl = templates_[id];
    if (tpl.tokens.size() != tokens.size()) continue;
    int equal = 0;
    for (std::size_t i = 0; i < tokens.size(); ++i)
      if (!tpl.tokens[i].wildcard && tpl.tokens[i].text == tokens[i]) ++equal;
    const double sim = static_cast<double>(equal) / static_cast<double>(tpl.tokens.size());
    if (sim > best_sim) {
      best_sim = sim;
      best_id = id;
    }
  }

  if (best_id >= 0 && best_sim >= config_.sim_threshold) {
    Template& tpl = templates_[best_id];
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (!tpl.tokens[i].wildcard && tpl.tokens[i].text != tokens[i]) {
        tpl.tokens[i].wildcard = true;
        tpl.tokens[i].text.clear();
      }
    }
    ++tpl.count;
    return best_id;
  }

  Template tpl;
  tpl.template_id = static_cast<int>(templates_.size());
  tpl.count = 1;
  tpl.tokens.reserve(tokens.size());
  for (const auto& t : tokens) tpl.tokens.push_back({false, t});
  templates_.push_back(std::move(tpl));
  leaf->group.push_back(templates_.back().template_id);
  return templates_.back().template_id;
}

std::vector<std::pair<LogRecord, int>> parse_file(const std::string& path,
                                                  const HeaderPattern& pattern,
                                                  DrainTree& tree) {
  std::vector<std::pair<LogRecord, int>> out;
  for (LogRecord& rec : split_file(path, pattern)) {
    const auto tokens = DrainTree::message_tokens(rec.message);
    const int id = tokens.empty() ? -1 : tree.match(tokens);
    out.emplace_back(std::move(rec), id);
  }
  return out;
}

}  // namespace colog

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "adsim/ads/node.hpp"

namespace adsim::carla {

inline const ads::Category kSlide = "slide";
inline const ads::Category kArticle = "article";
inline const ads::Category kAnnotation = "annotation";
inline const ads::Category kQuestion = "question";
inline const ads::Category kLink = "link";
inline const ads::Category kAnswer = "answer";

enum class Role { Student, Staff };
enum class Joker { Link, Annotation, Statistics };

std::string_view joker_name(Joker j);
std::optional<Joker> parse_joker(std::string_view text);

struct CarlaParams {
  int fake_threshold = 3;                 // negatives minus positives
  std::uint32_t fake_min_evaluations = 5;
  double purge_interval = 60.0;
  std::uint32_t jokers_per_kind = 1;
  double quiz_deadline = 0.0;
  friend bool operator==(const CarlaParams&, const CarlaParams&) = default;
};

/// Fake rule: net negative rating of at least `threshold` over at least
/// `min_total` evaluations.
bool is_fake(const std::map<NodeId, ads::Evaluation>& evaluations, int threshold, std::uint32_t min_total);

/// Who is staff and who plays the quiz. Shared by every node's app.
struct Roster {
  std::set<NodeId> staff;
  std::set<NodeId> players;
};

struct JokerHint {
  Joker kind = Joker::Link;
  std::vector<ads::ItemId> items;              // links, annotations, or answers consulted
  std::map<std::string, std::uint32_t> tally;  // statistics joker: choice -> count
};

struct RankEntry {
  NodeId player;
  std::uint32_t score = 0;
  friend bool operator==(const RankEntry&, const RankEntry&) = default;
};

/// Orders by score descending, then id ascending.
std::vector<RankEntry> rank(const std::map<NodeId, std::uint32_t>& scores);

/// Distinct correctly answered questions per player among `answers`.
std::map<NodeId, std::uint32_t> scores_from(const std::vector<ads::InfoItem>& answers);

/// The CARLA application instance on one device, on top of its ADS node.
class App {
 public:
  App(ads::Node& node, sim::Kernel& kernel, Role role, std::shared_ptr<const Roster> roster, CarlaParams params);

  Role role() const { return role_; }
  ads::Node& node() { return node_; }
  const ads::Node& node() const { return node_; }
  std::uint32_t score() const { return score_; }
  std::uint32_t jokers_left(Joker j) const { return jokers_.at(j); }

  /// Staff only. A repeated release of the same id publishes a new version.
  /// Throws InvalidArgument for students or when `at_region` is given and the
  /// node is outside it; NoKnownMarket propagates from publishing.
  ads::InfoItem release_material(const ads::ItemId& id, const ads::Category& category, const std::string& course,
                                 ads::Attributes extra, std::optional<Region> at_region = std::nullopt);
  ads::QueryId fetch_missed_material(const std::string& course, double ttl, const ads::MovementPlan& plan);

  ads::InfoItem annotate(const ads::ItemId& id, const ads::ItemId& ref, const std::string& text);
  ads::InfoItem ask(const ads::ItemId& id, const std::string& course, const std::vector<std::string>& choices,
                    std::uint32_t correct);
  ads::InfoItem link(const ads::ItemId& id, const ads::ItemId& from, const ads::ItemId& to);

  /// Throws SelfEvaluation, NotHeld, or InvalidArgument for ratings other than +-1.
  void evaluate(const ads::ItemId& item, int rating);
  /// Returns whether the choice was correct. Throws NotHeld, AlreadyAnswered.
  bool answer(const ads::ItemId& question, std::uint32_t choice);
  /// Local knowledge only. Throws NotHeld, NoJokerLeft.
  JokerHint use_joker(Joker kind, const ads::ItemId& question);
  /// Hides student-originated items that meet the fake rule. Returns the count.
  std::size_t purge_fakes();
  /// Ranking from this node's knowledge. Throws BeforeDeadline.
  /// `global_answers` only feeds the completeness figure in the trace.
  std::vector<RankEntry> quiz_rank(std::size_t global_answers);

  /// Answer items this player created.
  const std::map<ads::ItemId, ads::ItemId>& answered() const { return answered_; }

 private:
  void trace(std::string_view kind, const sim::Fields& f);
  std::vector<ads::InfoItem> local(const ads::Category& cat, std::string_view key, const ads::ItemId& ref) const;

  ads::Node& node_;
  sim::Kernel& kernel_;
  Role role_;
  std::shared_ptr<const Roster> roster_;
  CarlaParams params_;
  std::map<Joker, std::uint32_t> jokers_;
  std::map<ads::ItemId, ads::ItemId> answered_;  // question -> answer item
  std::uint32_t score_ = 0;
};

}  // namespace adsim::carla

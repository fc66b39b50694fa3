#include "adsim/carla/app.hpp"

#include <algorithm>

#include "adsim/core/error.hpp"

namespace adsim::carla {

std::string_view joker_name(Joker j) {
  switch (j) {
    case Joker::Link: return "link";
    case Joker::Annotation: return "annotation";
    case Joker::Statistics: return "statistics";
  }
  return "?";
}

std::optional<Joker> parse_joker(std::string_view text) {
  if (text == "link") return Joker::Link;
  if (text == "annotation") return Joker::Annotation;
  if (text == "statistics") return Joker::Statistics;
  return std::nullopt;
}

bool is_fake(const std::map<NodeId, ads::Evaluation>& evaluations, int threshold, std::uint32_t min_total) {
  int pos = 0;
  int neg = 0;
  for (const auto& [who, e] : evaluations) (e.rating > 0 ? pos : neg) += 1;
  return neg - pos >= threshold && evaluations.size() >= min_total;
}

std::vector<RankEntry> rank(const std::map<NodeId, std::uint32_t>& scores) {
  std::vector<RankEntry> out;
  out.reserve(scores.size());
  for (const auto& [p, s] : scores) out.push_back({p, s});
  std::sort(out.begin(), out.end(), [](const RankEntry& a, const RankEntry& b) {
    return a.score != b.score ? a.score > b.score : a.player < b.player;
  });
  return out;
}

std::map<NodeId, std::uint32_t> scores_from(const std::vector<ads::InfoItem>& answers) {
  std::set<std::pair<NodeId, std::string>> correct;
  for (const ads::InfoItem& a : answers) {
    auto q = a.payload.find("question");
    auto c = a.payload.find("correct");
    if (q != a.payload.end() && c != a.payload.end() && c->second == "1") correct.emplace(a.origin, q->second);
  }
  std::map<NodeId, std::uint32_t> out;
  for (const auto& [player, q] : correct) ++out[player];
  return out;
}

App::App(ads::Node& node, sim::Kernel& kernel, Role role, std::shared_ptr<const Roster> roster, CarlaParams params)
    : node_(node), kernel_(kernel), role_(role), roster_(std::move(roster)), params_(params) {
  for (Joker j : {Joker::Link, Joker::Annotation, Joker::Statistics}) jokers_[j] = params_.jokers_per_kind;
}

void App::trace(std::string_view kind, const sim::Fields& f) { kernel_.trace().record(kernel_.now(), node_.id(), kind, f); }

ads::InfoItem App::release_material(const ads::ItemId& id, const ads::Category& category, const std::string& course,
                                    ads::Attributes extra, std::optional<Region> at_region) {
  if (role_ != Role::Staff) throw InvalidArgument("only staff release material");
  if (category != kSlide && category != kArticle) throw InvalidArgument("material must be a slide or an article");
  if (at_region && !at_region->contains(kernel_.position(node_.id()))) {
    throw InvalidArgument("node " + std::to_string(node_.id().value) + " is not at the release location");
  }
  extra["course"] = course;
  ads::InfoItem item;
  if (node_.store().contains(id)) {
    item = node_.update_item(id, std::move(extra));
  } else {
    item = node_.create_item(category, std::move(extra), id.counter);
  }
  trace("RELEASE", sim::Fields().add("item", ads::to_string(item.id)).add("v", item.version).add("course", course));
  node_.publish(item);
  return item;
}

ads::QueryId App::fetch_missed_material(const std::string& course, double ttl, const ads::MovementPlan& plan) {
  ads::Selector sel;
  sel.categories = {kSlide, kArticle};
  sel.predicate["course"] = course;
  return node_.launch_asrq(sel, ttl, plan);
}

ads::InfoItem App::annotate(const ads::ItemId& id, const ads::ItemId& ref, const std::string& text) {
  return node_.create_item(kAnnotation, {{"ref", ads::to_string(ref)}, {"text", text}}, id.counter);
}

ads::InfoItem App::ask(const ads::ItemId& id, const std::string& course, const std::vector<std::string>& choices,
                       std::uint32_t correct) {
  if (correct >= choices.size()) throw InvalidArgument("correct choice out of range");
  std::string joined;
  for (const auto& c : choices) joined += (joined.empty() ? "" : "|") + c;
  return node_.create_item(
      kQuestion, {{"course", course}, {"choices", joined}, {"correct", std::to_string(correct)}}, id.counter);
}

ads::InfoItem App::link(const ads::ItemId& id, const ads::ItemId& from, const ads::ItemId& to) {
  return node_.create_item(kLink, {{"from", ads::to_string(from)}, {"to", ads::to_string(to)}}, id.counter);
}

void App::evaluate(const ads::ItemId& item, int rating) {
  if (rating != 1 && rating != -1) throw InvalidArgument("rating must be +1 or -1");
  const ads::InfoItem* held = node_.store().find_visible(item);
  if (held == nullptr) throw NotHeld("item " + ads::to_string(item) + " not held");
  if (held->origin == node_.id()) throw SelfEvaluation("node rates its own item " + ads::to_string(item));
  node_.store().evaluate(item, node_.id(), rating, kernel_.now());
  trace("EVAL", sim::Fields().add("item", ads::to_string(item)).add("rating", rating));
}

bool App::answer(const ads::ItemId& question, std::uint32_t choice) {
  const ads::InfoItem* q = node_.store().find_visible(question);
  if (q == nullptr || q->category != kQuestion) throw NotHeld("question " + ads::to_string(question) + " not held");
  if (answered_.count(question) != 0) throw AlreadyAnswered("question " + ads::to_string(question) + " answered");
  auto c = q->payload.find("correct");
  const bool correct = c != q->payload.end() && c->second == std::to_string(choice);
  const ads::InfoItem a = node_.create_item(kAnswer, {{"question", ads::to_string(question)},
                                                      {"choice", std::to_string(choice)},
                                                      {"correct", correct ? "1" : "0"}});
  answered_[question] = a.id;
  if (correct) ++score_;
  trace("ANSWER", sim::Fields()
                      .add("question", ads::to_string(question))
                      .add("choice", choice)
                      .add("correct", correct)
                      .add("score", score_));
  return correct;
}

std::vector<ads::InfoItem> App::local(const ads::Category& cat, std::string_view key, const ads::ItemId& ref) const {
  ads::Selector sel;
  sel.categories = {cat};
  sel.predicate[std::string(key)] = ads::to_string(ref);
  return node_.query_local(sel);
}

JokerHint App::use_joker(Joker kind, const ads::ItemId& question) {
  if (node_.store().find_visible(question) == nullptr) throw NotHeld("question " + ads::to_string(question) + " not held");
  std::uint32_t& left = jokers_.at(kind);
  if (left == 0) throw NoJokerLeft(std::string(joker_name(kind)) + " joker used up");
  --left;
  JokerHint hint;
  hint.kind = kind;
  switch (kind) {
    case Joker::Link: {
      std::set<ads::ItemId> ids;
      for (const auto& it : local(kLink, "from", question)) ids.insert(it.id);
      for (const auto& it : local(kLink, "to", question)) ids.insert(it.id);
      hint.items.assign(ids.begin(), ids.end());
      break;
    }
    case Joker::Annotation:
      for (const auto& it : local(kAnnotation, "ref", question)) hint.items.push_back(it.id);
      break;
    case Joker::Statistics:
      for (const auto& it : local(kAnswer, "question", question)) {
        hint.items.push_back(it.id);
        ++hint.tally[it.payload.at("choice")];
      }
      break;
  }
  std::string shown;
  if (kind == Joker::Statistics) {
    for (const auto& [choice, n] : hint.tally) shown += (shown.empty() ? "" : ",") + choice + ":" + std::to_string(n);
  } else {
    for (const auto& id : hint.items) shown += (shown.empty() ? "" : ",") + ads::to_string(id);
  }
  trace("JOKER", sim::Fields()
                     .add("kind", joker_name(kind))
                     .add("question", ads::to_string(question))
                     .add("hint", shown)
                     .add("left", left));
  return hint;
}

std::size_t App::purge_fakes() {
  std::vector<std::pair<ads::ItemId, std::pair<int, int>>> victims;
  for (const auto& [id, entry] : node_.store().entries()) {
    if (entry.hidden || roster_->staff.count(entry.item.origin) != 0) continue;
    if (!is_fake(entry.item.evaluations, params_.fake_threshold, params_.fake_min_evaluations)) continue;
    int pos = 0;
    int neg = 0;
    for (const auto& [who, e] : entry.item.evaluations) (e.rating > 0 ? pos : neg) += 1;
    victims.push_back({id, {neg, pos}});
  }
  for (const auto& [id, counts] : victims) {
    node_.store().hide(id);
    trace("PURGE", sim::Fields().add("item", ads::to_string(id)).add("neg", counts.first).add("pos", counts.second));
  }
  return victims.size();
}

std::vector<RankEntry> App::quiz_rank(std::size_t global_answers) {
  const double now = kernel_.now();
  if (now < params_.quiz_deadline) throw BeforeDeadline("quiz ranking before the deadline");
  ads::Selector sel;
  sel.categories = {kAnswer};
  const std::vector<ads::InfoItem> answers = node_.query_local(sel);
  std::map<NodeId, std::uint32_t> scores;
  for (NodeId p : roster_->players) scores[p] = 0;
  for (const auto& [p, s] : scores_from(answers)) {
    if (roster_->players.count(p) != 0) scores[p] = s;
  }
  std::vector<RankEntry> ranking = rank(scores);
  std::string shown;
  for (const RankEntry& e : ranking) {
    shown += (shown.empty() ? "" : ",") + std::to_string(e.player.value) + ":" + std::to_string(e.score);
  }
  const double completeness =
      global_answers == 0 ? 1.0 : static_cast<double>(answers.size()) / static_cast<double>(global_answers);
  trace("QUIZ_RANK", sim::Fields()
                         .add("ranking", shown)
                         .add("known", answers.size())
                         .add("global", global_answers)
                         .add("completeness", std::min(1.0, completeness)));
  return ranking;
}

}  // namespace adsim::carla

#pragma once

#include <cstddef>
#include <list>
#include <map>

namespace adsim::routing {

/// Bounded set that forgets the least recently inserted/touched key.
template <typename Key>
class LruSet {
 public:
  explicit LruSet(std::size_t capacity = 4096) : capacity_(capacity) {}

  /// Returns true when `key` was already present (and refreshes it).
  bool touch(const Key& key) {
    if (auto it = index_.find(key); it != index_.end()) {
      order_.splice(order_.begin(), order_, it->second);
      return true;
    }
    order_.push_front(key);
    index_.emplace(key, order_.begin());
    if (index_.size() > capacity_) {
      index_.erase(order_.back());
      order_.pop_back();
    }
    return false;
  }
  bool contains(const Key& key) const { return index_.count(key) != 0; }
  std::size_t size() const { return index_.size(); }
  std::size_t capacity() const { return capacity_; }

 private:
  std::size_t capacity_;
  std::list<Key> order_;
  std::map<Key, typename std::list<Key>::iterator> index_;
};

}  // namespace adsim::routing

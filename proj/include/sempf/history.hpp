#pragma once

#include <cstddef>
#include <cstdint>
#include <iterator>
#include <vector>

#include "sempf/context.hpp"
#include "sempf/isa.hpp"

namespace sempf {

struct HistoryEntry {
  RetiredEvent event;
  BranchHistory bhr;  // as of this op's retirement, older branches applied
};

// Cyclic retirement history. Position 0 is the youngest entry.
class HistoryQueue {
 public:
  explicit HistoryQueue(std::size_t capacity = 128) : ring_(capacity ? capacity : 1) {}

  void push(const HistoryEntry& e) {
    head_ = (head_ + 1) % ring_.size();
    ring_[head_] = e;
    if (size_ < ring_.size()) ++size_;
  }

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return ring_.size(); }
  bool empty() const { return size_ == 0; }

  // k-th youngest entry; k < size().
  const HistoryEntry& at(std::size_t k) const {
    return ring_[(head_ + ring_.size() - k) % ring_.size()];
  }

  class BackwardIterator {
   public:
    using iterator_category = std::forward_iterator_tag;
    using value_type = HistoryEntry;
    using difference_type = std::ptrdiff_t;
    using pointer = const HistoryEntry*;
    using reference = const HistoryEntry&;

    BackwardIterator() = default;
    BackwardIterator(const HistoryQueue* q, std::size_t k) : q_(q), k_(k) {}
    reference operator*() const { return q_->at(k_); }
    pointer operator->() const { return &q_->at(k_); }
    BackwardIterator& operator++() {
      ++k_;
      return *this;
    }
    BackwardIterator operator++(int) {
      auto t = *this;
      ++k_;
      return t;
    }
    bool operator==(const BackwardIterator& o) const { return k_ == o.k_; }
    std::size_t position() const { return k_; }

   private:
    const HistoryQueue* q_ = nullptr;
    std::size_t k_ = 0;
  };

  struct BackwardRange {
    BackwardIterator b, e;
    BackwardIterator begin() const { return b; }
    BackwardIterator end() const { return e; }
  };

  // Youngest to oldest, starting `from` entries back from the head.
  BackwardRange walk_backward(std::size_t from = 0) const {
    const std::size_t start = from < size_ ? from : size_;
    return {BackwardIterator(this, start), BackwardIterator(this, size_)};
  }

 private:
  std::vector<HistoryEntry> ring_;
  std::size_t head_ = 0;
  std::size_t size_ = 0;
};

}  // namespace sempf

#pragma once

#include <array>
#include <cstddef>

namespace qarrival {

// Customer belief: a is pessimistic (slow server), b is optimistic (fast server).
enum class Belief { a = 0, b = 1 };

inline constexpr std::array<Belief, 2> both_beliefs{Belief::a, Belief::b};

constexpr Belief other(Belief i) { return i == Belief::a ? Belief::b : Belief::a; }

constexpr std::size_t index(Belief i) { return static_cast<std::size_t>(i); }

constexpr const char* name(Belief i) { return i == Belief::a ? "a" : "b"; }

// A value held once per belief.
template <class T>
struct PerBelief {
  T a{};
  T b{};

  T& operator[](Belief i) { return i == Belief::a ? a : b; }
  const T& operator[](Belief i) const { return i == Belief::a ? a : b; }
};

}  // namespace qarrival

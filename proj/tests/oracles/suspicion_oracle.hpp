#pragma once

// Hand-coded suspect-list counter for a single sender, written straight from
// the pseudocode without touching the Node class. One call per verdict.

#include <vector>

namespace oracle {

enum class Act { Process, Drop };
enum class Note { None, Suspect, Blocked, Honest };

struct Step {
  Act act;
  Note note;
  int r;
  bool in_sl;
  bool blocked;
};

class SuspicionCounter {
 public:
  Step feed(bool is_false) {
    if (blocked_) return snap(Act::Drop, Note::None);
    if (is_false) {
      if (!in_sl_) {
        in_sl_ = true;
        r_ = 1;
        return snap(Act::Process, Note::Suspect);
      }
      r_ += 1;
      if (r_ == 3) {
        blocked_ = true;
        return snap(Act::Drop, Note::Blocked);
      }
      return snap(Act::Drop, Note::None);
    }
    if (in_sl_) {
      r_ -= 1;
      if (r_ == 0) {
        in_sl_ = false;
        return snap(Act::Process, Note::Honest);
      }
    }
    return snap(Act::Process, Note::None);
  }

 private:
  Step snap(Act a, Note n) const { return {a, n, r_, in_sl_, blocked_}; }

  int r_ = 0;
  bool in_sl_ = false;
  bool blocked_ = false;
};

}  // namespace oracle

// Copyright 2026 The hiereval Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Bundled metric documents. Must stay byte-identical to trees/*.json; the
// test suite checks this.

#pragma once

#include <string_view>

#include "hiereval/metric_tree.hpp"

namespace hiereval {

inline constexpr std::string_view kQuestionTreeDocument = R"json({
  "description": "Input metric. A question must be on topic, factoid, answerable, and free of spelling and grammar errors to be good; difficulty is recorded for good questions and never fails.",
  "id": "question_tree",
  "name": "Question quality",
  "nodes": {
    "answerable": {
      "answers": [
        "yes",
        "no"
      ],
      "characteristic": "answerable",
      "prompt": "Does an answer to this question exist in the text collection?",
      "routing": {
        "no": {
          "terminal": "bad"
        },
        "yes": {
          "node": "spelling_errors"
        }
      }
    },
    "difficulty": {
      "answers": [
        "easy",
        "medium",
        "hard"
      ],
      "characteristic": "difficulty",
      "help": {
        "easy": "A single read of the passage makes the answer apparent.",
        "hard": "The passage needs repeated reading and possibly some reasoning to locate the answer.",
        "medium": "The question and the passage both need close, careful reading."
      },
      "prompt": "How hard is it to find the correct answer in the passage?",
      "routing": {
        "easy": {
          "terminal": "good"
        },
        "hard": {
          "terminal": "good"
        },
        "medium": {
          "terminal": "good"
        }
      }
    },
    "factoid": {
      "answers": [
        "yes",
        "no"
      ],
      "characteristic": "factoid",
      "prompt": "Is this a factoid question (who, what, where, when, why or how) whose answer is a short span of text?",
      "routing": {
        "no": {
          "terminal": "bad"
        },
        "yes": {
          "node": "answerable"
        }
      }
    },
    "grammar_errors": {
      "answers": [
        "yes",
        "no"
      ],
      "characteristic": "grammar",
      "prompt": "Does the question contain grammar errors?",
      "routing": {
        "no": {
          "node": "difficulty"
        },
        "yes": {
          "terminal": "bad"
        }
      }
    },
    "relevant": {
      "answers": [
        "yes",
        "no"
      ],
      "characteristic": "relevant",
      "prompt": "Is the question on the topic covered by the text collection?",
      "routing": {
        "no": {
          "terminal": "bad"
        },
        "yes": {
          "node": "factoid"
        }
      }
    },
    "spelling_errors": {
      "answers": [
        "yes",
        "no"
      ],
      "characteristic": "spelling",
      "prompt": "Does the question contain spelling errors?",
      "routing": {
        "no": {
          "node": "grammar_errors"
        },
        "yes": {
          "terminal": "bad"
        }
      }
    }
  },
  "root": "relevant",
  "target": "input"
}
)json";

inline constexpr std::string_view kAnswerTreeDocument = R"json({
  "description": "Output metric. The short answer is judged first. If it is unclear, or clear but off-topic, the evaluator judges the explanation passage instead. Partially accurate counts as a pass; inaccurate fails. The off-topic short-answer branch is answer_relevant.routing.no.",
  "id": "answer_tree",
  "name": "Answer quality",
  "nodes": {
    "answer_accuracy": {
      "answers": [
        "accurate",
        "partially_accurate",
        "inaccurate"
      ],
      "characteristic": "clinical_accuracy",
      "help": {
        "accurate": "Clinically correct and grounded in evidence-based information.",
        "inaccurate": "Not clinically correct and not grounded in evidence-based information.",
        "partially_accurate": "Partly clinically correct; evidence-based grounding is incomplete."
      },
      "prompt": "How clinically accurate is the short answer?",
      "routing": {
        "accurate": {
          "node": "answer_useful"
        },
        "inaccurate": {
          "terminal": "bad"
        },
        "partially_accurate": {
          "node": "answer_useful"
        }
      }
    },
    "answer_relevant": {
      "answers": [
        "yes",
        "no"
      ],
      "characteristic": "relevant",
      "prompt": "Does the short answer address the question?",
      "routing": {
        "no": {
          "node": "explanation_relevant"
        },
        "yes": {
          "node": "answer_accuracy"
        }
      }
    },
    "answer_useful": {
      "answers": [
        "yes",
        "no"
      ],
      "characteristic": "useful",
      "prompt": "Is the short answer useful?",
      "routing": {
        "no": {
          "terminal": "bad"
        },
        "yes": {
          "terminal": "good"
        }
      }
    },
    "clear": {
      "answers": [
        "yes",
        "no"
      ],
      "characteristic": "clear",
      "prompt": "Is the meaning of the short answer easy to understand?",
      "routing": {
        "no": {
          "node": "explanation_relevant"
        },
        "yes": {
          "node": "answer_relevant"
        }
      }
    },
    "explanation_accuracy": {
      "answers": [
        "accurate",
        "partially_accurate",
        "inaccurate"
      ],
      "characteristic": "clinical_accuracy",
      "help": {
        "accurate": "Clinically correct and grounded in evidence-based information.",
        "inaccurate": "Not clinically correct and not grounded in evidence-based information.",
        "partially_accurate": "Partly clinically correct; evidence-based grounding is incomplete."
      },
      "prompt": "How clinically accurate is the explanation passage?",
      "routing": {
        "accurate": {
          "node": "explanation_useful"
        },
        "inaccurate": {
          "terminal": "bad"
        },
        "partially_accurate": {
          "node": "explanation_useful"
        }
      },
      "uses_explanation": true
    },
    "explanation_relevant": {
      "answers": [
        "yes",
        "no"
      ],
      "characteristic": "relevant",
      "prompt": "Does the explanation passage address the question?",
      "routing": {
        "no": {
          "terminal": "bad"
        },
        "yes": {
          "node": "explanation_accuracy"
        }
      },
      "uses_explanation": true
    },
    "explanation_useful": {
      "answers": [
        "yes",
        "no"
      ],
      "characteristic": "useful",
      "prompt": "Is the explanation passage useful?",
      "routing": {
        "no": {
          "terminal": "bad"
        },
        "yes": {
          "terminal": "good"
        }
      },
      "uses_explanation": true
    }
  },
  "root": "clear",
  "target": "output"
}
)json";

inline const MetricTree& question_tree() {
  static const MetricTree tree = parse_tree(kQuestionTreeDocument);
  return tree;
}

inline const MetricTree& answer_tree() {
  static const MetricTree tree = parse_tree(kAnswerTreeDocument);
  return tree;
}

}  // namespace hiereval

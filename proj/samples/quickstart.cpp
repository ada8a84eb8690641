// Copyright 2026 The newsei Authors.
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

// In-memory walk through the pipeline with the offline mock providers:
// two articles -> chunks -> pair-centric graph -> datastore -> one answer.

#include <iostream>

#include "newsei/newsei.hpp"

int main() {
  using namespace newsei;
  const std::vector<nlohmann::json> articles = {
      {{"id", "n1"},
       {"source", "wire"},
       {"date", "20240302"},
       {"body", "<e id=\"P1\">Tessa Vale</e> arrived in <e id=\"C1\">Orin</e> on Saturday. "
                "<e id=\"P1\">Tessa Vale</e> met <e id=\"P2\">Rui Okafor</e> before the marathon."}},
      {{"id", "n2"},
       {"source", "wire"},
       {"date", "20240303"},
       {"body", "<e id=\"P1\">Tessa Vale</e> beat <e id=\"P2\">Rui Okafor</e> at the marathon in "
                "<e id=\"C1\">Orin</e>. Organizers praised the crowd."}},
  };

  PipelineConfig cfg;
  const auto chunks = ingest_articles(articles, cfg, SentenceSegmenter());

  RuleBasedLlm llm;
  const auto run = extract_graph(chunks, Variant::PairCentric, cfg, llm);
  std::cout << "interactions: " << run.graph.interactions.size() << "\n";
  for (const auto& i : run.graph.interactions) std::cout << "  " << to_json(i).dump() << "\n";

  HashingEmbedder embedder(cfg.providers.dimension);
  const auto store = index(documents_from(run.graph), embedder);

  const auto q = reformulate("Tessa Vale", DateStamp::parse("20240303"));
  const auto resp = answer(q, store, embedder, llm, {Strategy::Temporal, 5, 3, {}});
  std::cout << q.reformulated << "\n" << resp.text << "\n";
  return 0;
}

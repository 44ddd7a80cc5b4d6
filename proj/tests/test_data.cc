// Copyright 2026 The PrivRecourse Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "privrecourse/data.hpp"
#include "test_support.hpp"

namespace privrecourse {
namespace {

FeatureSchema AdultLike() {
  FeatureSchema s;
  s.features = {{"age", FeatureKind::kContinuous, 17, 90},
                {"work", FeatureKind::kCategorical, 0, 0, {"private", "gov", "self"}},
                {"hours", FeatureKind::kContinuous, 1, 99}};
  s.features[0].integral = true;
  s.label_column = "income";
  s.favorable_label = ">50K";
  return s;
}

template <typename F>
ErrorCode CodeOf(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvalidArgument;
}

TEST(Preprocess, MinMaxScalesAge) {
  const auto s = AdultLike();
  const Record x = PreprocessRecord(s, std::vector<double>{41, 1, 40});
  ASSERT_EQ(x.size(), 5u);
  EXPECT_NEAR(x[0], 24.0 / 73.0, 1e-12);
  EXPECT_NEAR(x[0], 0.3288, 1e-4);
  EXPECT_EQ(x[1], 0.0);
  EXPECT_EQ(x[2], 1.0);
  EXPECT_EQ(x[3], 0.0);
  EXPECT_NEAR(x[4], 39.0 / 98.0, 1e-12);
}

TEST(Preprocess, ClipsOutOfBoundsValues) {
  const auto s = AdultLike();
  const Record x = PreprocessRecord(s, std::vector<double>{10, 0, 150});
  EXPECT_EQ(x[0], 0.0);
  EXPECT_EQ(x[4], 1.0);
}

TEST(Preprocess, EncodedValuesStayInUnitInterval) {
  const auto s = AdultLike();
  Rng rng(3);
  for (int i = 0; i < 500; ++i) {
    const std::vector<double> raw{rng.Uniform() * 200 - 50, static_cast<double>(rng.Index(3)),
                                  rng.Uniform() * 300 - 100};
    for (double v : PreprocessRecord(s, raw)) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(InverseTransform, RoundsIntegralFeatures) {
  const auto s = AdultLike();
  const Record raw = InverseTransform(s, std::vector<double>{0.3288, 0, 0, 1, 0.5});
  EXPECT_EQ(raw[0], 41.0);
  EXPECT_EQ(raw[1], 2.0);
  EXPECT_NEAR(raw[2], 50.0, 1e-12);
}

TEST(InverseTransform, RoundTripsEncodedRecords) {
  const auto s = AdultLike();
  for (double age = 17; age <= 90; age += 1) {
    const Record raw{age, 1, 37.5};
    const Record back = InverseTransform(s, PreprocessRecord(s, raw));
    EXPECT_EQ(back[0], age);
    EXPECT_EQ(back[1], 1.0);
    EXPECT_NEAR(back[2], 37.5, 1e-9);
  }
}

TEST(InverseTransform, RejectsBrokenOneHotBlock) {
  const auto s = AdultLike();
  EXPECT_EQ(CodeOf([&] { InverseTransform(s, std::vector<double>{0.5, 0.5, 0.4, 0, 0.5}); }),
            ErrorCode::kInvalidEncoding);
  EXPECT_EQ(CodeOf([&] { InverseTransform(s, std::vector<double>{0.5, 0, 0}); }),
            ErrorCode::kDimensionError);
}

TEST(Schema, ValidateRejectsDegenerateBounds) {
  FeatureSchema s = testing::UnitSchema(2);
  s.features[1].max = s.features[1].min;
  EXPECT_EQ(CodeOf([&] { s.Validate(); }), ErrorCode::kDegenerateBounds);
}

TEST(Schema, ValidateRejectsMonotoneCategorical) {
  FeatureSchema s = AdultLike();
  s.features[1].constraint = Constraint::kNonDecreasing;
  EXPECT_EQ(CodeOf([&] { s.Validate(); }), ErrorCode::kSchemaMismatch);
}

TEST(Schema, BlocksAndColumnNames) {
  const auto s = AdultLike();
  const auto blocks = s.Blocks();
  ASSERT_EQ(blocks.size(), 3u);
  EXPECT_EQ(blocks[1].offset, 1u);
  EXPECT_EQ(blocks[1].width, 3u);
  EXPECT_EQ(blocks[2].offset, 4u);
  EXPECT_EQ(s.encoded_width(), 5u);
  EXPECT_EQ(s.continuous_count(), 2u);
  EXPECT_EQ(s.EncodedColumnNames()[2], "work=gov");
}

TEST(Schema, JsonRoundTripPreservesFingerprint) {
  const auto s = AdultLike();
  const nlohmann::json j = s;
  const auto back = j.get<FeatureSchema>();
  EXPECT_EQ(back.Fingerprint(), s.Fingerprint());
  FeatureSchema other = s;
  other.features[0].max = 91;
  EXPECT_NE(other.Fingerprint(), s.Fingerprint());
}

TEST(ParseCsv, ReadsColumnsByNameAndLabels) {
  std::istringstream in(
      "hours,age,work,income\n"
      "40,41,gov,>50K\n"
      "20, 30 ,private,<=50K\n");
  const auto raw = ParseCsv(in, AdultLike());
  ASSERT_EQ(raw.size(), 2u);
  EXPECT_EQ(raw.rows[0], (Record{41, 1, 40}));
  EXPECT_EQ(raw.rows[1], (Record{30, 0, 20}));
  EXPECT_EQ(raw.labels[0], kFavorable);
  EXPECT_EQ(raw.labels[1], kUnfavorable);
}

TEST(ParseCsv, HandlesQuotedCells) {
  FeatureSchema s = AdultLike();
  s.features[1].categories = {"a,b", "gov", "self"};
  std::istringstream in("age,work,hours,income\n41,\"a,b\",40,>50K\n");
  const auto raw = ParseCsv(in, s);
  EXPECT_EQ(raw.rows[0][1], 0.0);
}

TEST(ParseCsv, ErrorKinds) {
  const auto s = AdultLike();
  EXPECT_EQ(CodeOf([&] {
              std::istringstream in("age,hours,income\n41,40,>50K\n");
              ParseCsv(in, s);
            }),
            ErrorCode::kSchemaMismatch);
  EXPECT_EQ(CodeOf([&] {
              std::istringstream in("age,work,hours,income\nforty,gov,40,>50K\n");
              ParseCsv(in, s);
            }),
            ErrorCode::kParseError);
  EXPECT_EQ(CodeOf([&] {
              std::istringstream in("age,work,hours,income\n41,gov,40\n");
              ParseCsv(in, s);
            }),
            ErrorCode::kParseError);
  EXPECT_EQ(CodeOf([&] {
              std::istringstream in("age,work,hours,income\n41,navy,40,>50K\n");
              ParseCsv(in, s);
            }),
            ErrorCode::kUnknownCategory);
}

Dataset Labeled(std::size_t n, std::size_t favorable) {
  Dataset ds{testing::UnitSchema(1), PointSet(1), {}};
  for (std::size_t i = 0; i < n; ++i) {
    ds.rows.Append(std::vector<double>{static_cast<double>(i) / static_cast<double>(n)});
    ds.labels.push_back(i < favorable ? kFavorable : kUnfavorable);
  }
  return ds;
}

TEST(Split, StratifiedProportionsAndDisjointness) {
  const Dataset ds = Labeled(1000, 240);
  const auto split = StratifiedSplitAndSample(ds, 0.2, 300, 5);
  EXPECT_EQ(split.test.size(), 200u);
  EXPECT_EQ(split.train.size(), 800u);
  EXPECT_EQ(split.graph_sample.size(), 300u);
  const auto fav = std::count(split.test.labels.begin(), split.test.labels.end(), kFavorable);
  EXPECT_EQ(fav, 48);
  std::set<double> train_vals, test_vals;
  for (std::size_t i = 0; i < split.train.size(); ++i) train_vals.insert(split.train.rows.row(i)[0]);
  for (std::size_t i = 0; i < split.test.size(); ++i) test_vals.insert(split.test.rows.row(i)[0]);
  for (double v : test_vals) EXPECT_FALSE(train_vals.contains(v));
  for (std::size_t i = 0; i < split.graph_sample.size(); ++i) {
    EXPECT_TRUE(train_vals.contains(split.graph_sample.rows.row(i)[0]));
  }
}

TEST(Split, SameSeedSameSplit) {
  const Dataset ds = Labeled(500, 100);
  const auto a = StratifiedSplitAndSample(ds, 0.3, 50, 9);
  const auto b = StratifiedSplitAndSample(ds, 0.3, 50, 9);
  const auto c = StratifiedSplitAndSample(ds, 0.3, 50, 10);
  EXPECT_EQ(a.graph_sample.rows, b.graph_sample.rows);
  EXPECT_EQ(a.test.rows, b.test.rows);
  EXPECT_FALSE(a.graph_sample.rows == c.graph_sample.rows);
}

TEST(Split, OversizedSampleIsRejected) {
  const Dataset ds = Labeled(100, 50);
  EXPECT_EQ(CodeOf([&] { StratifiedSplitAndSample(ds, 0.2, 81, 1); }),
            ErrorCode::kInsufficientData);
  EXPECT_EQ(CodeOf([&] { SampleRows(ds, 101, 1); }), ErrorCode::kInsufficientData);
}

TEST(Sampling, WithoutReplacementIsDistinctAndUniform) {
  Rng rng(17);
  std::vector<int> hits(10, 0);
  for (int rep = 0; rep < 20000; ++rep) {
    const auto idx = SampleWithoutReplacement(10, 3, rng);
    std::set<std::size_t> uniq(idx.begin(), idx.end());
    ASSERT_EQ(uniq.size(), 3u);
    for (auto i : idx) ++hits[i];
  }
  // Each index is drawn with probability 3/10.
  for (int h : hits) EXPECT_NEAR(h / 20000.0, 0.3, 0.02);
}

}  // namespace
}  // namespace privrecourse

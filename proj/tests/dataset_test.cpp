#include <numeric>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "cifnet/dataset.hpp"

using namespace cifnet;

namespace {

EmbeddingDataset labeled(std::size_t classes, std::size_t per_class, std::size_t dim = 3) {
  EmbeddingDataset d(dim);
  std::vector<float> row(dim);
  for (std::size_t i = 0; i < per_class; ++i)
    for (std::size_t c = 0; c < classes; ++c) {
      std::iota(row.begin(), row.end(), static_cast<float>(c * 100 + i));
      d.add(row, static_cast<ClassId>(c * 7 + 3));  // sparse original ids
    }
  return d;
}

}  // namespace

TEST(Dataset, AddKeepsIndexConsistent) {
  const auto d = labeled(4, 5);
  EXPECT_EQ(d.size(), 20u);
  for (const auto& [id, idx] : d.class_index())
    for (std::size_t i : idx) EXPECT_EQ(d.label(i), id);
  EXPECT_EQ(d.class_size(3), 5u);
  EXPECT_EQ(d.class_size(4), 0u);
  EmbeddingDataset e(3);
  EXPECT_THROW(e.add(std::vector<float>{1, 2}, 0), InputError);
}

TEST(Dataset, ToMatrixPutsSamplesInColumns) {
  EmbeddingDataset d(2);
  d.add(std::vector<float>{1.5f, -2.0f}, 0);
  d.add(std::vector<float>{3.0f, 4.25f}, 1);
  const Matrix x = d.to_matrix();
  ASSERT_EQ(x.rows(), 2);
  ASSERT_EQ(x.cols(), 2);
  EXPECT_EQ(x(0, 0), 1.5);
  EXPECT_EQ(x(1, 0), -2.0);
  EXPECT_EQ(x(1, 1), 4.25);
}

TEST(SplitTasks, HundredClassesByFive) {
  const auto d = labeled(100, 2);
  const auto plan = split_tasks(d, 5, 1993);
  EXPECT_EQ(plan.split.num_tasks(), 20u);
  for (const auto& g : plan.split.groups) EXPECT_EQ(g.size(), 5u);
}

TEST(SplitTasks, SingleTaskWhenIncrementCoversAll) {
  const auto d = labeled(10, 3);
  const auto plan = split_tasks(d, 10, 0);
  EXPECT_EQ(plan.split.num_tasks(), 1u);
  EXPECT_EQ(plan.tasks[0].size(), 30u);
}

TEST(SplitTasks, LastGroupMayBeSmaller) {
  const auto plan = split_tasks(labeled(7, 1), 3, 0);
  ASSERT_EQ(plan.split.num_tasks(), 3u);
  EXPECT_EQ(plan.split.groups[2].size(), 1u);
}

TEST(SplitTasks, DeterministicUnderSeed) {
  const auto d = labeled(30, 2);
  const auto a = split_tasks(d, 4, 99), b = split_tasks(d, 4, 99), c = split_tasks(d, 4, 100);
  EXPECT_EQ(a.split.class_order, b.split.class_order);
  EXPECT_EQ(a.split.groups, b.split.groups);
  for (std::size_t t = 0; t < a.tasks.size(); ++t) EXPECT_EQ(a.tasks[t], b.tasks[t]);
  EXPECT_NE(a.split.class_order, c.split.class_order);
}

TEST(SplitTasks, GroupsDisjointAndRecordsConserved) {
  const auto d = labeled(23, 4);
  const auto plan = split_tasks(d, 5, 3);
  std::set<ClassId> all;
  std::size_t records = 0;
  for (std::size_t t = 0; t < plan.tasks.size(); ++t) {
    for (ClassId id : plan.split.groups[t]) EXPECT_TRUE(all.insert(id).second);
    records += plan.tasks[t].size();
    std::set<ClassId> in_task(plan.split.groups[t].begin(), plan.split.groups[t].end());
    for (ClassId l : plan.tasks[t].labels()) EXPECT_TRUE(in_task.contains(l));
  }
  EXPECT_EQ(all.size(), 23u);
  EXPECT_EQ(records, d.size());
}

TEST(SplitTasks, DenseIdsFollowShuffledOrder) {
  const auto d = labeled(6, 2);
  const auto plan = split_tasks(d, 2, 8);
  // every dense id maps back to the original record contents
  for (std::size_t t = 0; t < plan.tasks.size(); ++t) {
    const auto& task = plan.tasks[t];
    for (std::size_t i = 0; i < task.size(); ++i) {
      const ClassId original = plan.split.class_order[task.label(i)];
      EXPECT_EQ((original - 3) % 7, 0u);
      EXPECT_EQ(plan.split.dense_id(original), task.label(i));
    }
  }
}

TEST(SplitTasks, MaxClassesSelectsPrefix) {
  const auto d = labeled(20, 2);
  const auto plan = split_tasks(d, 5, 4, 10);
  EXPECT_EQ(plan.split.class_order.size(), 10u);
  EXPECT_EQ(plan.split.num_tasks(), 2u);
  const auto full = split_tasks(d, 5, 4);
  EXPECT_TRUE(std::equal(plan.split.class_order.begin(), plan.split.class_order.end(),
                         full.split.class_order.begin()));
  const auto test = remap_to_split(d, plan.split);
  EXPECT_EQ(test.size(), 20u);
}

TEST(SplitTasks, Errors) {
  const auto d = labeled(5, 1);
  EXPECT_THROW(split_tasks(d, 0, 0), InputError);
  EXPECT_THROW(split_tasks(d, 6, 0), InputError);
}

use std::ops::Range;

use chrono::{Datelike, NaiveDate, Timelike};

use crate::data::series::SeriesTable;
use crate::error::{Error, Result};

pub fn hours_in_year(year: i32) -> usize {
    let days = if NaiveDate::from_ymd_opt(year, 1, 1)
        .expect("valid year")
        .leap_year()
    {
        366
    } else {
        365
    };
    days * 24
}

/// Step ranges covering the train/validation/test years, in that order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    pub train: Range<usize>,
    pub val: Range<usize>,
    pub test: Range<usize>,
}

impl Split {
    /// First calendar year of each span, given the table it was cut from.
    pub fn year_spans(&self, start_year: i32, counts: (usize, usize, usize)) -> [String; 3] {
        let (n_train, n_val, n_test) = counts;
        let span = |first: i32, n: usize| {
            if n == 1 {
                format!("{first}")
            } else {
                format!("{first}-{}", first + n as i32 - 1)
            }
        };
        [
            span(start_year, n_train),
            span(start_year + n_train as i32, n_val),
            span(start_year + (n_train + n_val) as i32, n_test),
        ]
    }
}

/// Cuts an hourly table into consecutive blocks of whole calendar years:
/// the first `train_years` years for training, the next `val_years` for
/// validation, the next `test_years` for testing.
pub fn split_chronological(
    table: &SeriesTable,
    train_years: usize,
    val_years: usize,
    test_years: usize,
) -> Result<Split> {
    if table.step_hours() != 1 {
        return Err(Error::Config(format!(
            "chronological split needs an hourly table, got step {}h",
            table.step_hours()
        )));
    }
    let start = table.start_time();
    if start.ordinal0() != 0 || start.hour() != 0 {
        return Err(Error::Config(format!(
            "chronological split needs a table starting January 1 00:00, got {start}"
        )));
    }
    if train_years == 0 || val_years == 0 || test_years == 0 {
        return Err(Error::Config(
            "train, validation and test spans each need at least one year".into(),
        ));
    }
    let start_year = start.year();
    let mut boundaries = [0usize; 4];
    let mut cursor = 0usize;
    let mut year = start_year;
    for (b, span) in [train_years, val_years, test_years].iter().enumerate() {
        for _ in 0..*span {
            cursor += hours_in_year(year);
            year += 1;
        }
        boundaries[b + 1] = cursor;
    }
    if cursor > table.len() {
        let last = year - 1;
        return Err(Error::Config(format!(
            "split through year {last} needs {cursor} hours but the table has {}",
            table.len()
        )));
    }
    Ok(Split {
        train: boundaries[0]..boundaries[1],
        val: boundaries[1]..boundaries[2],
        test: boundaries[2]..boundaries[3],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synthetic::{generate_synthetic, SyntheticConfig};

    #[test]
    fn leap_years_counted() {
        assert_eq!(hours_in_year(2007), 8760);
        assert_eq!(hours_in_year(2008), 8784);
        assert_eq!(hours_in_year(2100), 8760); // century non-leap
        assert_eq!(hours_in_year(2000), 8784); // 400-year leap
    }

    #[test]
    fn thirteen_year_table_splits_nine_two_two() {
        let table = generate_synthetic(&SyntheticConfig::default()).unwrap();
        let split = split_chronological(&table, 9, 2, 2).unwrap();
        // 2007-2015 has leap years 2008 and 2012; 2016-2017 has 2016.
        assert_eq!(split.train.len(), (9 * 365 + 2) * 24);
        assert_eq!(split.val.len(), (2 * 365 + 1) * 24);
        assert_eq!(split.test.len(), 2 * 365 * 24);
        assert_eq!(split.test.end, table.len());
    }

    #[test]
    fn spans_are_contiguous_and_ordered() {
        let table = generate_synthetic(&SyntheticConfig::default()).unwrap();
        let split = split_chronological(&table, 9, 2, 2).unwrap();
        assert_eq!(split.train.start, 0);
        assert_eq!(split.val.start, split.train.end);
        assert_eq!(split.test.start, split.val.end);
    }

    #[test]
    fn out_of_span_request_is_rejected() {
        let table = generate_synthetic(&SyntheticConfig {
            years: 4,
            ..SyntheticConfig::default()
        })
        .unwrap();
        let err = split_chronological(&table, 9, 2, 2).unwrap_err();
        assert!(err.to_string().contains("2019"), "{err}");
        assert!(split_chronological(&table, 2, 1, 1).is_ok());
    }

    #[test]
    fn split_boundaries_fall_on_year_starts() {
        let table = generate_synthetic(&SyntheticConfig::default()).unwrap();
        let split = split_chronological(&table, 9, 2, 2).unwrap();
        let at_val = table.timestamp(split.val.start);
        assert_eq!(
            (at_val.year(), at_val.ordinal(), at_val.hour()),
            (2016, 1, 0)
        );
        let at_test = table.timestamp(split.test.start);
        assert_eq!(
            (at_test.year(), at_test.ordinal(), at_test.hour()),
            (2018, 1, 0)
        );
    }

    #[test]
    fn year_span_labels() {
        let table = generate_synthetic(&SyntheticConfig::default()).unwrap();
        let split = split_chronological(&table, 9, 2, 2).unwrap();
        assert_eq!(
            split.year_spans(2007, (9, 2, 2)),
            [
                "2007-2015".to_string(),
                "2016-2017".into(),
                "2018-2019".into()
            ]
        );
    }
}

use crate::jobs::Job;

use super::Account;

/// Things a caller can try to do.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    CreateJob,
    ListJobs,
    ReadJob,
    ExportJob,
    WriteJob,
    DeleteJob,
    ReadAnalysis,
    ReadImage,
    ReviewAccount,
}

#[derive(Debug, Clone, Copy)]
pub enum Resource<'a> {
    None,
    Job(&'a Job),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Allow,
    Deny,
}

impl Decision {
    pub fn is_allowed(self) -> bool {
        self == Decision::Allow
    }
}

/// Access rule: nothing for accounts that are not approved; jobs are
/// readable by owner, manager, or anyone when public; writable by owner or
/// manager; reviews are manager-only.
pub fn authorize(user: &Account, action: Action, resource: Resource<'_>) -> Decision {
    if !user.is_approved() {
        return Decision::Deny;
    }
    let is_owner = |job: &Job| job.owner == user.account_id;
    let allowed = match (action, resource) {
        (Action::ReviewAccount, _) => user.is_manager(),
        (Action::ReadJob | Action::ExportJob, Resource::Job(job)) => {
            user.is_manager() || is_owner(job) || job.spec.visibility == crate::domain::Visibility::Public
        }
        (Action::WriteJob | Action::DeleteJob, Resource::Job(job)) => user.is_manager() || is_owner(job),
        (Action::ReadJob | Action::ExportJob | Action::WriteJob | Action::DeleteJob, Resource::None) => false,
        (Action::CreateJob | Action::ListJobs | Action::ReadAnalysis | Action::ReadImage, _) => true,
    };
    if allowed {
        Decision::Allow
    } else {
        Decision::Deny
    }
}
